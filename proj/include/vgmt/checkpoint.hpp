#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "vgmt/model.hpp"
#include "vgmt/vocab.hpp"

namespace vgmt {

struct Checkpoint {
  ModelConfig config;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  ModelParams<float> params;
};

// Layout (little-endian):
//   "VGMC" | u32 version = 1
//   u32 n | n bytes of canonical (key-sorted, compact) model config JSON
//   source vocabulary, then target vocabulary:
//     u32 count | count x (u32 len | token bytes), ids 4.. in order
//   u32 n_params | n_params x (u32 len | name | u32 ndim | ndim x u32 dim |
//                               prod(dims) x float32)
inline constexpr std::string_view kCheckpointMagic = "VGMC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vgmt
