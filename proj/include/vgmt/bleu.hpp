#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vgmt/vocab.hpp"

namespace vgmt {

struct BleuReport {
  double bleu = 0.0;  // in [0, 1]
  std::array<double, 4> precisions{};
  std::array<std::uint64_t, 4> matches{};
  std::array<std::uint64_t, 4> totals{};
  double brevity_penalty = 0.0;
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;
};

struct BleuOptions {
  /// Add-one smoothing of the 2..4-gram precisions, for tiny debugging
  /// corpora only. The reported metric is unsmoothed.
  bool smooth = false;
};

/// Corpus-level BLEU-4. N-gram matches are clipped per segment by the maximum
/// count in any single reference and summed over the corpus. The reference
/// length of a segment is the one closest to the hypothesis length (ties to
/// the shorter). BP = 1 if hyp_len > ref_len else exp(1 - ref_len / hyp_len);
/// an empty hypothesis corpus scores 0 with BP 0.
BleuReport corpus_bleu4(std::span<const TokenList> hyps, std::span<const std::vector<TokenList>> refs,
                        const BleuOptions& options = {});

/// {"bleu", "bleu_percent", "precisions", "brevity_penalty", "hyp_len", "ref_len"}.
nlohmann::ordered_json bleu_report_to_json(const BleuReport& r);

}  // namespace vgmt
