#include "vgmt/dataset.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "vgmt/binary_io.hpp"
#include "vgmt/error.hpp"

namespace vgmt {

namespace {

[[noreturn]] void bad_line(const std::string& source, std::uint64_t line, const std::string& msg) {
  throw FormatError(source + ":" + std::to_string(line) + ": " + msg, line);
}

std::string required_string(const nlohmann::json& obj, const char* key, const std::string& source,
                            std::uint64_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) bad_line(source, line, std::string("missing required key \"") + key + "\"");
  if (!it->is_string()) bad_line(source, line, std::string("key \"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(const std::string& text, const std::string& source) {
  std::vector<DatasetRecord> records;
  std::istringstream in(text);
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      bad_line(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) bad_line(source, line_no, "expected a JSON object");
    DatasetRecord rec;
    rec.id = required_string(obj, "id", source, line_no);
    rec.src = required_string(obj, "src", source, line_no);
    if (obj.contains("tgt")) rec.tgt = required_string(obj, "tgt", source, line_no);
    for (const auto& [key, value] : obj.items()) {
      if (key.rfind("feat", 0) != 0) continue;
      if (!value.is_string()) bad_line(source, line_no, "key \"" + key + "\" must be a string");
      rec.feats.emplace(key, value.get<std::string>());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<DatasetRecord> read_dataset_records(const std::filesystem::path& path) {
  return parse_dataset(read_file_bytes(path), path.string());
}

std::string format_dataset(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["src"] = r.src;
    if (r.tgt) obj["tgt"] = *r.tgt;
    for (const auto& [key, path] : r.feats) obj[key] = path;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  write_file_bytes(path, format_dataset(records));
}

std::vector<ParallelExample> read_dataset(const std::filesystem::path& path, Language src_lang,
                                          Language tgt_lang) {
  const auto base = path.parent_path();
  std::vector<ParallelExample> examples;
  for (auto& rec : read_dataset_records(path)) {
    ParallelExample ex;
    ex.id = std::move(rec.id);
    ex.src_tokens = preprocess(rec.src, src_lang);
    if (rec.tgt) {
      ex.has_tgt = true;
      ex.tgt_tokens = preprocess(*rec.tgt, tgt_lang);
    }
    for (const auto& [key, p] : rec.feats) {
      std::filesystem::path fp(p);
      ex.feat_paths.emplace(key, fp.is_absolute() ? fp : base / fp);
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

SegmentList build_keyframe_segments(const std::vector<std::int64_t>& keyframes, std::int64_t n_frames) {
  SegmentList segments;
  segments.reserve(keyframes.size());
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    const auto k = keyframes[i];
    if (k < 0 || k >= n_frames)
      throw ContractError("keyframe " + std::to_string(k) + " outside [0, " + std::to_string(n_frames) + ")");
    if (i > 0 && k <= keyframes[i - 1]) throw ContractError("keyframes must be strictly increasing");
    segments.push_back({k, std::min(k + kSegmentFrames - 1, n_frames - 1)});
  }
  return segments;
}

}  // namespace vgmt
