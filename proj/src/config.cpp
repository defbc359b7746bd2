#include "vgmt/config.hpp"

#include <functional>
#include <map>

#include "vgmt/binary_io.hpp"

namespace vgmt {

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  nlohmann::ordered_json j;
  j["d_emb"] = m.d_emb;
  j["d_h"] = m.d_h;
  j["d_dec"] = m.d_dec;
  j["d_feat"] = m.d_feat;
  j["d_common"] = m.d_common;
  j["d_att"] = m.d_att;
  j["dropout"] = m.dropout;
  j["max_src_len"] = m.max_src_len;
  j["max_feat_len"] = m.max_feat_len;
  j["max_tgt_len"] = m.max_tgt_len;
  j["use_pe"] = m.use_pe;
  j["pe_one_based"] = m.pe_one_based;
  j["text_only"] = m.text_only;
  j["feat_key"] = m.feat_key;
  j["src_lang"] = m.src_lang;
  j["tgt_lang"] = m.tgt_lang;
  j["lr"] = t.adam.lr;
  j["beta1"] = t.adam.beta1;
  j["beta2"] = t.adam.beta2;
  j["eps"] = t.adam.eps;
  j["clip_norm"] = t.clip_norm;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  j["early_stop_metric"] = t.metric == EarlyStopMetric::ValidLoss ? "loss" : "bleu";
  j["min_freq"] = c.min_freq;
  j["seed"] = c.seed ? nlohmann::ordered_json(*c.seed) : nlohmann::ordered_json(nullptr);
  j["beam"] = c.beam;
  j["max_len"] = c.max_len;
  j["length_normalize"] = c.length_normalize;
  j["jobs"] = c.jobs;
  j["train_data"] = c.train_data;
  j["valid_data"] = c.valid_data;
  j["out_dir"] = c.out_dir;
  return j;
}

namespace {

template <typename T>
std::function<void(const nlohmann::json&)> setter(const std::string& key, T& field) {
  return [&field, key](const nlohmann::json& v) {
    try {
      field = v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config key \"" + key + "\": " + e.what());
    }
  };
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  RunConfig c;
  auto& m = c.model;
  auto& t = c.train;
  std::string metric = "loss";
  std::map<std::string, std::function<void(const nlohmann::json&)>> fields;
  auto bind = [&fields](const std::string& key, auto& field) { fields.emplace(key, setter(key, field)); };
  bind("d_emb", m.d_emb);
  bind("d_h", m.d_h);
  bind("d_dec", m.d_dec);
  bind("d_feat", m.d_feat);
  bind("d_common", m.d_common);
  bind("d_att", m.d_att);
  bind("dropout", m.dropout);
  bind("max_src_len", m.max_src_len);
  bind("max_feat_len", m.max_feat_len);
  bind("max_tgt_len", m.max_tgt_len);
  bind("use_pe", m.use_pe);
  bind("pe_one_based", m.pe_one_based);
  bind("text_only", m.text_only);
  bind("feat_key", m.feat_key);
  bind("src_lang", m.src_lang);
  bind("tgt_lang", m.tgt_lang);
  bind("lr", t.adam.lr);
  bind("beta1", t.adam.beta1);
  bind("beta2", t.adam.beta2);
  bind("eps", t.adam.eps);
  bind("clip_norm", t.clip_norm);
  bind("batch_size", t.batch_size);
  bind("max_epochs", t.max_epochs);
  bind("patience", t.patience);
  bind("early_stop_metric", metric);
  bind("min_freq", c.min_freq);
  bind("beam", c.beam);
  bind("max_len", c.max_len);
  bind("length_normalize", c.length_normalize);
  bind("jobs", c.jobs);
  bind("train_data", c.train_data);
  bind("valid_data", c.valid_data);
  bind("out_dir", c.out_dir);

  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      if (value.is_null()) continue;
      if (!value.is_number_unsigned()) throw UsageError("config key \"seed\": expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw UsageError("unknown config key \"" + key + "\"");
    it->second(value);
  }
  if (metric == "loss") t.metric = EarlyStopMetric::ValidLoss;
  else if (metric == "bleu") t.metric = EarlyStopMetric::ValidBleu;
  else throw UsageError("config key \"early_stop_metric\": expected \"loss\" or \"bleu\"");
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path.string() + ": malformed JSON: " + e.what());
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const UsageError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

}  // namespace vgmt
