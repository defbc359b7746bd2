#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vgmt/dataset.hpp"

namespace vgmt {

enum class SyntheticMode {
  /// tgt = src over a random vocabulary; features are random noise.
  Copy,
  /// src is the constant sentence "video"; the feature rows are one-hot
  /// symbols whose chronological order is the target sentence.
  OrderSensitive,
};

SyntheticMode parse_synthetic_mode(const std::string& name);

struct SyntheticOptions {
  std::uint64_t seed = 0;
  int n_examples = 100;
  /// Copy: source vocabulary size. OrderSensitive: number of symbols.
  int vocab_size = 10;
  /// Copy: sentence length. OrderSensitive: feature rows T.
  int seq_len = 5;
  int d_feat = 16;
  SyntheticMode mode = SyntheticMode::Copy;
  std::string id_prefix = "ex";
};

struct SyntheticExample {
  std::string id;
  std::string src;
  std::string tgt;
  FeatureMatrix feats;
};

/// Token spelling of symbol k: "a".."z", then "s26", "s27", ...
std::string synthetic_symbol(int k);

/// Order-sensitive targets are uniformly random arrangements of the fixed
/// multiset {symbol(t mod vocab_size) : t < seq_len}, so every example shares
/// the same bag of feature rows and only their order tells targets apart.
/// One-hot symbol k occupies column d_feat - vocab_size + k, the slow end of
/// the sinusoidal spectrum.
std::vector<SyntheticExample> generate_synthetic_task(const SyntheticOptions& options);

/// Writes `data.jsonl` plus `feats/<id>.vgmf` under `dir`.
std::filesystem::path write_synthetic_task(const std::filesystem::path& dir,
                                           const std::vector<SyntheticExample>& examples);

}  // namespace vgmt
