#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vgmt/features.hpp"
#include "vgmt/text.hpp"

namespace vgmt {

/// One line of a dataset file:
///   {"id": str, "src": str, "tgt": str (optional), "feat": path (optional)}
/// Further string members whose key starts with "feat" name alternative
/// feature streams (e.g. "feat_scene"); a model selects one by key.
struct DatasetRecord {
  std::string id;
  std::string src;
  std::optional<std::string> tgt;
  std::map<std::string, std::string> feats;
};

struct ParallelExample {
  std::string id;
  TokenList src_tokens;
  TokenList tgt_tokens;
  bool has_tgt = false;
  /// Feature paths by key, already resolved against the dataset directory.
  std::map<std::string, std::filesystem::path> feat_paths;
};

/// Parses JSONL text. Blank lines are skipped; any malformed line raises
/// FormatError carrying its 1-based line number.
std::vector<DatasetRecord> parse_dataset(const std::string& text, const std::string& source);
std::vector<DatasetRecord> read_dataset_records(const std::filesystem::path& path);
std::string format_dataset(const std::vector<DatasetRecord>& records);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

/// Reads and tokenises a dataset; relative feature paths are resolved
/// against the dataset file's directory.
std::vector<ParallelExample> read_dataset(const std::filesystem::path& path, Language src_lang,
                                          Language tgt_lang);

/// Inclusive frame range [start, end].
struct Segment {
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool operator==(const Segment&) const = default;
};
using SegmentList = std::vector<Segment>;

inline constexpr std::int64_t kSegmentFrames = 32;

/// One segment per keyframe k: [k, min(k + 31, n_frames - 1)], in order.
SegmentList build_keyframe_segments(const std::vector<std::int64_t>& keyframes, std::int64_t n_frames);

}  // namespace vgmt
