#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "vgmt/model.hpp"
#include "vgmt/train.hpp"

namespace vgmt {

/// Everything a run needs. Serialised as a flat JSON object; reading rejects
/// unknown keys and keeps defaults for absent ones. Vocabulary sizes are not
/// part of it; they come from the training data.
struct RunConfig {
  ModelConfig model;  // vocab_src / vocab_tgt ignored
  TrainOptions train;
  int min_freq = 5;
  std::optional<std::uint64_t> seed;
  int beam = 5;
  int max_len = 0;  // 0: 2 * src_len + 10, capped at max_tgt_len
  bool length_normalize = true;
  int jobs = 1;
  std::string train_data;
  std::string valid_data;
  std::string out_dir;
};

nlohmann::ordered_json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig read_run_config(const std::filesystem::path& path);

}  // namespace vgmt
