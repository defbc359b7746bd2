#include "vgmt/synthetic.hpp"

#include <algorithm>
#include <random>

#include "vgmt/error.hpp"

namespace vgmt {

SyntheticMode parse_synthetic_mode(const std::string& name) {
  if (name == "copy") return SyntheticMode::Copy;
  if (name == "order" || name == "order_sensitive") return SyntheticMode::OrderSensitive;
  throw UsageError("unknown synthetic mode '" + name + "' (expected copy or order)");
}

std::string synthetic_symbol(int k) {
  if (k < 26) return std::string(1, static_cast<char>('a' + k));
  return "s" + std::to_string(k);
}

std::vector<SyntheticExample> generate_synthetic_task(const SyntheticOptions& o) {
  if (o.n_examples < 0 || o.vocab_size < 1 || o.seq_len < 1 || o.d_feat < 1)
    throw ContractError("synthetic task: sizes must be >= 1");
  if (o.mode == SyntheticMode::OrderSensitive && o.d_feat < o.vocab_size)
    throw ContractError("synthetic task: d_feat must be >= number of symbols");

  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> symbol(0, o.vocab_size - 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<SyntheticExample> out;
  out.reserve(static_cast<std::size_t>(o.n_examples));
  for (int n = 0; n < o.n_examples; ++n) {
    SyntheticExample ex;
    ex.id = o.id_prefix + std::to_string(n);
    std::vector<int> seq(static_cast<std::size_t>(o.seq_len));
    if (o.mode == SyntheticMode::Copy) {
      for (auto& s : seq) s = symbol(rng);
      ex.feats = FeatureMatrix(o.seq_len, o.d_feat);
      for (Index i = 0; i < ex.feats.size(); ++i) ex.feats.data()[i] = static_cast<float>(noise(rng));
    } else {
      for (int t = 0; t < o.seq_len; ++t) seq[static_cast<std::size_t>(t)] = t % o.vocab_size;
      std::shuffle(seq.begin(), seq.end(), rng);
      ex.feats = FeatureMatrix::Zero(o.seq_len, o.d_feat);
      for (int t = 0; t < o.seq_len; ++t) ex.feats(t, o.d_feat - o.vocab_size + seq[static_cast<std::size_t>(t)]) = 1.0f;
    }
    TokenList words;
    for (int s : seq) words.push_back(synthetic_symbol(s));
    ex.tgt = join_tokens(words, Language::English);
    ex.src = o.mode == SyntheticMode::Copy ? ex.tgt : "video";
    out.push_back(std::move(ex));
  }
  return out;
}

std::filesystem::path write_synthetic_task(const std::filesystem::path& dir,
                                           const std::vector<SyntheticExample>& examples) {
  std::filesystem::create_directories(dir / "feats");
  std::vector<DatasetRecord> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) {
    const std::string rel = "feats/" + ex.id + ".vgmf";
    write_feature_file(dir / rel, ex.feats);
    records.push_back({ex.id, ex.src, ex.tgt, {{"feat", rel}}});
  }
  const auto path = dir / "data.jsonl";
  write_dataset(path, records);
  return path;
}

}  // namespace vgmt
