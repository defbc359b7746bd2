#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "vgmt/tensor.hpp"

namespace vgmt {

/// T x d auxiliary feature sequence; row t belongs to the t-th segment in
/// chronological order.
using FeatureMatrix = Matrix<float>;

// File layout (little-endian): "VGMF", u32 version = 1, u32 T, u32 d,
// then T*d float32 row-major. Exactly 16 + 4*T*d bytes.
inline constexpr std::string_view kFeatureMagic = "VGMF";
inline constexpr std::uint32_t kFeatureVersion = 1;

std::string encode_feature_matrix(const FeatureMatrix& m);
FeatureMatrix decode_feature_matrix(std::string_view bytes, const std::string& source);

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_file(const std::filesystem::path& path);

}  // namespace vgmt
