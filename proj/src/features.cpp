#include "vgmt/features.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "vgmt/binary_io.hpp"

namespace vgmt {

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::string encode_feature_matrix(const FeatureMatrix& m) {
  for (Index i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i])) throw NumericError("feature matrix contains non-finite values");
  ByteWriter w;
  w.bytes(kFeatureMagic);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  return w.buffer();
}

FeatureMatrix decode_feature_matrix(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  if (r.bytes(4, "magic") != kFeatureMagic) r.fail_at(0, "bad magic (expected \"VGMF\")");
  const auto version = r.u32("version");
  if (version != kFeatureVersion) r.fail_at(4, "unsupported version " + std::to_string(version));
  const std::uint64_t rows = r.u32("row count");
  const std::uint64_t cols = r.u32("column count");
  const unsigned __int128 payload = static_cast<unsigned __int128>(rows) * cols * 4;
  if (payload != r.remaining())
    r.fail("header declares " + std::to_string(rows) + "x" + std::to_string(cols) + " (" +
           std::to_string(rows * cols * 4) + " payload bytes) but " + std::to_string(r.remaining()) + " remain");
  FeatureMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.size(); ++i) {
    const auto at = r.offset();
    const float v = r.f32("value");
    if (!std::isfinite(v)) r.fail_at(at, "non-finite feature value");
    m.data()[i] = v;
  }
  return m;
}

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m) {
  write_file_bytes(path, encode_feature_matrix(m));
}

FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  return decode_feature_matrix(read_file_bytes(path), path.string());
}

}  // namespace vgmt
