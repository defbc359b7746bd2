#include "vgmt/text.hpp"

#include <cctype>
#include <cstdint>

#include "vgmt/error.hpp"

namespace vgmt {

Language parse_language(std::string_view name) {
  if (name == "en") return Language::English;
  if (name == "zh") return Language::Chinese;
  throw UsageError("unknown language '" + std::string(name) + "' (expected en or zh)");
}

std::string language_name(Language lang) { return lang == Language::English ? "en" : "zh"; }

namespace {

bool is_ascii_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }
bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Decodes one UTF-8 scalar starting at `i`; returns its byte length. Invalid
// sequences consume one byte and yield U+FFFD.
std::size_t utf8_scalar(std::string_view s, std::size_t i, std::uint32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (i + len > s.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

bool is_unicode_space(std::uint32_t cp) {
  return cp == ' ' || (cp >= '\t' && cp <= '\r') || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

}  // namespace

TokenList preprocess_english(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_ascii_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string word(text.substr(i, j - i));
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    std::size_t lo = 0, hi = word.size();
    while (lo < hi && is_ascii_punct(static_cast<unsigned char>(word[lo]))) tokens.emplace_back(1, word[lo++]);
    std::size_t tail = hi;
    while (tail > lo && is_ascii_punct(static_cast<unsigned char>(word[tail - 1]))) --tail;
    if (tail > lo) tokens.push_back(word.substr(lo, tail - lo));
    for (std::size_t k = tail; k < hi; ++k) tokens.emplace_back(1, word[k]);
    i = j;
  }
  return tokens;
}

TokenList preprocess_chinese(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    std::uint32_t cp = 0;
    const auto len = utf8_scalar(text, i, cp);
    if (!is_unicode_space(cp)) tokens.emplace_back(text.substr(i, len));
    i += len;
  }
  return tokens;
}

TokenList preprocess(std::string_view text, Language lang) {
  return lang == Language::English ? preprocess_english(text) : preprocess_chinese(text);
}

std::string join_tokens(const TokenList& tokens, Language lang) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && lang == Language::English) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace vgmt
