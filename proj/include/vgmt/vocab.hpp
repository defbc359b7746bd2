#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vgmt {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kNumSpecials = 4;

using TokenList = std::vector<std::string>;

/// Token <-> id bijection. Ids 0..3 are PAD, UNK, BOS, EOS.
class Vocabulary {
 public:
  Vocabulary();

  /// Specials followed by `tokens` in the given order. Duplicates and
  /// special spellings are rejected.
  static Vocabulary from_tokens(std::span<const std::string> tokens, int min_freq = 1);

  int size() const { return static_cast<int>(token_of_.size()); }
  int min_freq() const { return min_freq_; }

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const { return id_of_.count(token) != 0; }

  /// Non-special tokens in id order.
  std::span<const std::string> regular_tokens() const {
    return std::span<const std::string>(token_of_).subspan(kNumSpecials);
  }

  bool operator==(const Vocabulary& other) const { return token_of_ == other.token_of_; }

 private:
  void push(const std::string& token);

  std::unordered_map<std::string, int> id_of_;
  std::vector<std::string> token_of_;
  int min_freq_ = 1;
};

const std::vector<std::string>& special_tokens();

/// Keeps tokens seen at least `min_freq` times; ids by descending count,
/// ties broken lexicographically.
Vocabulary build_vocab(std::span<const TokenList> corpus, int min_freq = 5);

/// Unknown tokens map to UNK.
std::vector<int> lookup(const Vocabulary& vocab, std::span<const std::string> tokens);

/// Drops PAD, BOS and EOS. Throws IndexError on ids outside the vocabulary.
TokenList detokenize(const Vocabulary& vocab, std::span<const int> ids);

/// One token per line; line k (0-based) holds id k + 4.
void write_vocab_file(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab_file(const std::filesystem::path& path);

}  // namespace vgmt
