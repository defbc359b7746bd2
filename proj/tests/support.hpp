#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "vgmt/model.hpp"

namespace vgmt::testing {

inline ModelConfig tiny_config(int vocab_src = 6, int vocab_tgt = 7) {
  ModelConfig c;
  c.vocab_src = vocab_src;
  c.vocab_tgt = vocab_tgt;
  c.d_emb = 3;
  c.d_h = 2;
  c.d_dec = 3;
  c.d_feat = 4;
  c.d_common = 3;
  c.d_att = 2;
  c.dropout = 0.0;
  return c;
}

template <typename S>
Matrix<S> random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(d(rng));
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vgmt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace vgmt::testing
