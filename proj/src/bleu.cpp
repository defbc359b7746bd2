#include "vgmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "vgmt/error.hpp"

namespace vgmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::uint64_t>;

NgramCounts count_ngrams(const TokenList& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

std::uint64_t closest_ref_length(std::size_t hyp_len, const std::vector<TokenList>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = static_cast<long long>(r.size()) - static_cast<long long>(hyp_len);
    const auto best_d = static_cast<long long>(best) - static_cast<long long>(hyp_len);
    if (std::llabs(d) < std::llabs(best_d) || (std::llabs(d) == std::llabs(best_d) && r.size() < best)) best = r.size();
  }
  return best;
}

}  // namespace

BleuReport corpus_bleu4(std::span<const TokenList> hyps, std::span<const std::vector<TokenList>> refs,
                        const BleuOptions& options) {
  if (hyps.size() != refs.size())
    throw ContractError("corpus_bleu4: " + std::to_string(hyps.size()) + " hypotheses vs " +
                        std::to_string(refs.size()) + " reference sets");
  if (hyps.empty()) throw ContractError("corpus_bleu4: empty corpus");

  BleuReport r;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    if (refs[s].empty()) throw ContractError("corpus_bleu4: segment " + std::to_string(s) + " has no reference");
    r.hyp_len += hyps[s].size();
    r.ref_len += closest_ref_length(hyps[s].size(), refs[s]);
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto hyp_counts = count_ngrams(hyps[s], n);
      NgramCounts max_ref;
      for (const auto& ref : refs[s])
        for (const auto& [gram, c] : count_ngrams(ref, n)) max_ref[gram] = std::max(max_ref[gram], c);
      for (const auto& [gram, c] : hyp_counts) {
        auto it = max_ref.find(gram);
        r.matches[n - 1] += std::min(c, it == max_ref.end() ? std::uint64_t{0} : it->second);
        r.totals[n - 1] += c;
      }
    }
  }

  double log_sum = 0.0;
  bool any_zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    double num = static_cast<double>(r.matches[n]);
    double den = static_cast<double>(r.totals[n]);
    if (options.smooth && n > 0) {
      num += 1.0;
      den += 1.0;
    }
    r.precisions[n] = den > 0.0 ? num / den : 0.0;
    if (r.precisions[n] <= 0.0) any_zero = true;
    else log_sum += std::log(r.precisions[n]);
  }

  if (r.hyp_len == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hyp_len > r.ref_len) {
    r.brevity_penalty = 1.0;
  } else {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len));
  }
  r.bleu = any_zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

nlohmann::ordered_json bleu_report_to_json(const BleuReport& r) {
  nlohmann::ordered_json j;
  j["bleu"] = r.bleu;
  j["bleu_percent"] = r.bleu * 100.0;
  j["precisions"] = r.precisions;
  j["brevity_penalty"] = r.brevity_penalty;
  j["hyp_len"] = r.hyp_len;
  j["ref_len"] = r.ref_len;
  return j;
}

}  // namespace vgmt
