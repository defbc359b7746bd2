#include "vgmt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "vgmt/error.hpp"

namespace vgmt {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {"<pad>", "<unk>", "<s>", "</s>"};
  return specials;
}

Vocabulary::Vocabulary() {
  for (const auto& s : special_tokens()) push(s);
}

void Vocabulary::push(const std::string& token) {
  id_of_.emplace(token, static_cast<int>(token_of_.size()));
  token_of_.push_back(token);
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens, int min_freq) {
  Vocabulary v;
  v.min_freq_ = min_freq;
  for (const auto& t : tokens) {
    if (t.empty()) throw ContractError("vocabulary: empty token");
    if (v.contains(t)) throw ContractError("vocabulary: duplicate token '" + t + "'");
    v.push(t);
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = id_of_.find(token);
  return it == id_of_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw IndexError("vocabulary: id " + std::to_string(id) + " out of range [0, " + std::to_string(size()) + ")");
  return token_of_[static_cast<std::size_t>(id)];
}

Vocabulary build_vocab(std::span<const TokenList> corpus, int min_freq) {
  if (min_freq < 1) throw ContractError("build_vocab: min_freq must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& sentence : corpus)
    for (const auto& t : sentence) ++counts[t];

  const auto& specials = special_tokens();
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [token, count] : counts) {
    if (count < min_freq || token.empty()) continue;
    if (std::find(specials.begin(), specials.end(), token) != specials.end()) continue;
    kept.emplace_back(token, count);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, count] : kept) tokens.push_back(std::move(token));
  return Vocabulary::from_tokens(tokens, min_freq);
}

std::vector<int> lookup(const Vocabulary& vocab, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

TokenList detokenize(const Vocabulary& vocab, std::span<const int> ids) {
  TokenList out;
  for (int id : ids) {
    const auto& token = vocab.token(id);
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    out.push_back(token);
  }
  return out;
}

void write_vocab_file(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  for (const auto& t : vocab.regular_tokens()) out << t << '\n';
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

Vocabulary read_vocab_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open vocabulary file '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::uint64_t> seen;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty token", line_no);
    if (auto [it, fresh] = seen.emplace(line, line_no); !fresh)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": token '" + line +
                            "' already listed on line " + std::to_string(it->second),
                        line_no);
    tokens.push_back(line);
  }
  try {
    return Vocabulary::from_tokens(tokens);
  } catch (const ContractError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace vgmt
