#pragma once

#include <string>
#include <string_view>

#include "vgmt/vocab.hpp"

namespace vgmt {

enum class Language { English, Chinese };

Language parse_language(std::string_view name);
std::string language_name(Language lang);

/// Lower-cases ASCII letters, splits on whitespace, and peels leading and
/// trailing ASCII punctuation characters off each word as one-character
/// tokens ("Hello," -> "hello" ","). Inner punctuation ("don't") is kept.
TokenList preprocess_english(std::string_view text);

/// One token per Unicode scalar value, whitespace removed. Bytes that are not
/// valid UTF-8 become single-byte tokens.
TokenList preprocess_chinese(std::string_view text);

TokenList preprocess(std::string_view text, Language lang);

/// Inverse of tokenisation for output files: space-joined for English,
/// concatenated for Chinese.
std::string join_tokens(const TokenList& tokens, Language lang);

}  // namespace vgmt
