#include "vgmt/model.hpp"

namespace vgmt {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ContractError(std::string("model config: ") + name + " must be positive");
  };
  if (vocab_src < kNumSpecials || vocab_tgt < kNumSpecials)
    throw ContractError("model config: vocabularies must hold at least the " + std::to_string(kNumSpecials) +
                        " special tokens");
  positive(d_emb, "d_emb");
  positive(d_h, "d_h");
  positive(d_dec, "d_dec");
  positive(d_feat, "d_feat");
  positive(d_common, "d_common");
  positive(d_att, "d_att");
  positive(max_src_len, "max_src_len");
  positive(max_feat_len, "max_feat_len");
  positive(max_tgt_len, "max_tgt_len");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractError("model config: dropout must lie in [0, 1)");
  for (const auto* lang : {&src_lang, &tgt_lang})
    if (*lang != "en" && *lang != "zh") throw ContractError("model config: language must be \"en\" or \"zh\"");
  if (feat_key.rfind("feat", 0) != 0) throw ContractError("model config: feat_key must start with \"feat\"");
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return nlohmann::json{
      {"vocab_src", c.vocab_src},       {"vocab_tgt", c.vocab_tgt},       {"d_emb", c.d_emb},
      {"d_h", c.d_h},                   {"d_dec", c.d_dec},               {"d_feat", c.d_feat},
      {"d_common", c.d_common},         {"d_att", c.d_att},               {"dropout", c.dropout},
      {"max_src_len", c.max_src_len},   {"max_feat_len", c.max_feat_len}, {"max_tgt_len", c.max_tgt_len},
      {"use_pe", c.use_pe},             {"pe_one_based", c.pe_one_based}, {"text_only", c.text_only},
      {"feat_key", c.feat_key},         {"src_lang", c.src_lang},         {"tgt_lang", c.tgt_lang},
  };
}

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const std::string& key, T& out) {
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config key \"" + key + "\": " + e.what());
  }
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("model config must be a JSON object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "vocab_src") read_key(j, key, c.vocab_src);
    else if (key == "vocab_tgt") read_key(j, key, c.vocab_tgt);
    else if (key == "d_emb") read_key(j, key, c.d_emb);
    else if (key == "d_h") read_key(j, key, c.d_h);
    else if (key == "d_dec") read_key(j, key, c.d_dec);
    else if (key == "d_feat") read_key(j, key, c.d_feat);
    else if (key == "d_common") read_key(j, key, c.d_common);
    else if (key == "d_att") read_key(j, key, c.d_att);
    else if (key == "dropout") read_key(j, key, c.dropout);
    else if (key == "max_src_len") read_key(j, key, c.max_src_len);
    else if (key == "max_feat_len") read_key(j, key, c.max_feat_len);
    else if (key == "max_tgt_len") read_key(j, key, c.max_tgt_len);
    else if (key == "use_pe") read_key(j, key, c.use_pe);
    else if (key == "pe_one_based") read_key(j, key, c.pe_one_based);
    else if (key == "text_only") read_key(j, key, c.text_only);
    else if (key == "feat_key") read_key(j, key, c.feat_key);
    else if (key == "src_lang") read_key(j, key, c.src_lang);
    else if (key == "tgt_lang") read_key(j, key, c.tgt_lang);
    else throw UsageError("unknown model config key \"" + key + "\"");
  }
  return c;
}

Matrix<double> feature_states(const FeatureMatrix& feats, const ModelConfig& c) {
  if (feats.cols() != c.d_feat)
    throw DimensionError("feature matrix has " + std::to_string(feats.cols()) + " columns, model expects d_feat " +
                         std::to_string(c.d_feat));
  const Matrix<double> z = feats.cast<double>();
  if (!c.use_pe || z.rows() == 0) return z;
  return add_positional_encoding(z, positional_encoding(z.rows(), z.cols(), c.pe_one_based));
}

std::size_t target_token_count(std::span<const TrainingExample> batch) {
  std::size_t n = 0;
  for (const auto& ex : batch) n += ex.tgt_ids.empty() ? 0 : ex.tgt_ids.size() - 1;
  return n;
}

}  // namespace vgmt
