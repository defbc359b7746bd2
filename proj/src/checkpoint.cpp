#include "vgmt/checkpoint.hpp"

#include <map>
#include <vector>

#include "vgmt/binary_io.hpp"

namespace vgmt {

namespace {

void write_vocab(ByteWriter& w, const Vocabulary& v) {
  const auto tokens = v.regular_tokens();
  w.u32(static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) w.str(t);
}

Vocabulary read_vocab(ByteReader& r) {
  const auto at = r.offset();
  const auto n = r.u32("vocabulary size");
  std::vector<std::string> tokens;
  for (std::uint32_t i = 0; i < n; ++i) tokens.push_back(r.str("vocabulary token"));
  try {
    return Vocabulary::from_tokens(tokens);
  } catch (const ContractError& e) {
    r.fail_at(at, e.what());
  }
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(model_config_to_json(ckpt.config).dump());
  write_vocab(w, ckpt.src_vocab);
  write_vocab(w, ckpt.tgt_vocab);
  const auto params = ckpt.params.named();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.str(name);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (Index i = 0; i < t.size(); ++i) w.f32(t.value().data()[i]);
  }
  return w.buffer();
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  if (r.bytes(4, "magic") != kCheckpointMagic) r.fail_at(0, "bad magic (expected \"VGMC\")");
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) r.fail_at(4, "unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  const auto config_at = r.offset();
  const auto config_text = r.str("config");
  try {
    ckpt.config = model_config_from_json(nlohmann::json::parse(config_text));
    ckpt.config.validate();
  } catch (const std::exception& e) {
    r.fail_at(config_at, std::string("invalid config: ") + e.what());
  }
  ckpt.src_vocab = read_vocab(r);
  ckpt.tgt_vocab = read_vocab(r);
  if (ckpt.src_vocab.size() != ckpt.config.vocab_src || ckpt.tgt_vocab.size() != ckpt.config.vocab_tgt)
    r.fail("vocabulary sizes disagree with config");

  // Shapes come from the config; every stored tensor must match exactly once.
  Rng unused(0);
  ckpt.params = ModelParams<float>::init(ckpt.config, unused);
  std::map<std::string, Tensor<float>> expected;
  for (auto& [name, t] : ckpt.params.named()) expected.emplace(name, t);

  const auto n = r.u32("parameter count");
  if (n != expected.size())
    r.fail("expected " + std::to_string(expected.size()) + " parameters, found " + std::to_string(n));
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto at = r.offset();
    const auto name = r.str("parameter name");
    auto it = expected.find(name);
    if (it == expected.end()) r.fail_at(at, "unknown or repeated parameter '" + name + "'");
    const auto ndim = r.u32("parameter rank");
    if (ndim != 2) r.fail_at(at, "parameter '" + name + "' has rank " + std::to_string(ndim));
    const auto rows = r.u32("parameter shape");
    const auto cols = r.u32("parameter shape");
    auto& t = it->second;
    if (rows != t.rows() || cols != t.cols())
      r.fail_at(at, "parameter '" + name + "' shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " does not match config " + t.shape_string());
    auto& value = t.mutable_value();
    for (Index i = 0; i < value.size(); ++i) value.data()[i] = r.f32("parameter data");
    expected.erase(it);
  }
  if (r.remaining() != 0) r.fail(std::to_string(r.remaining()) + " trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path), path.string());
}

}  // namespace vgmt
