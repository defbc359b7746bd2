#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vgmt/checkpoint.hpp"
#include "vgmt/dataset.hpp"
#include "vgmt/model.hpp"

namespace vgmt {

using LogProbs = Eigen::VectorXd;

/// A (partial) output sentence. `ids` starts after BOS and ends with EOS once
/// finished.
struct Hypothesis {
  std::vector<int> ids;
  double logp = 0.0;
  bool finished = false;
};

/// Ranking score: logp / len(ids) with length normalisation, else logp.
inline double hypothesis_score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize || h.ids.empty()) return h.logp;
  return h.logp / static_cast<double>(h.ids.size());
}

/// Higher score first; ties go to the lexicographically smaller id sequence.
inline bool ranks_before(const Hypothesis& a, const Hypothesis& b, bool length_normalize) {
  const double sa = hypothesis_score(a, length_normalize);
  const double sb = hypothesis_score(b, length_normalize);
  if (sa != sb) return sa > sb;
  return a.ids < b.ids;
}

/// Sentence tokens without the trailing EOS.
inline std::vector<int> output_tokens(const Hypothesis& h) {
  std::vector<int> ids = h.ids;
  if (!ids.empty() && ids.back() == kEosId) ids.pop_back();
  return ids;
}

/// Decoding view of one model on one source sentence. No tape is recorded.
template <typename Scalar>
class ModelSession {
 public:
  using State = Tensor<Scalar>;

  ModelSession(const ModelParams<Scalar>& params, const ModelConfig& config, std::span<const int> src_ids,
               const FeatureMatrix* feats)
      : params_(&params), config_(&config), graph_(std::make_unique<Graph<Scalar>>(false)) {
    enc_ = encode(*graph_, src_ids, feats, params, config);
  }

  int vocab_size() const { return config_->vocab_tgt; }
  State initial_state() { return init_decoder_state(*graph_, enc_, *params_); }

  std::pair<State, LogProbs> step(const State& state, int prev_token) {
    auto out = decoder_step(*graph_, prev_token, state, enc_, *params_, *config_);
    return {out.state, out.scores.value().row(0).transpose().template cast<double>()};
  }

 private:
  const ModelParams<Scalar>* params_;
  const ModelConfig* config_;
  std::unique_ptr<Graph<Scalar>> graph_;
  EncodedSource<Scalar> enc_;
};

/// log(mean_k exp(lp_k)), per vocabulary entry, evaluated stably.
LogProbs ensemble_step(std::span<const LogProbs> members);

/// Several models advanced in lockstep on the same chosen tokens; their
/// per-step distributions are combined by probability averaging.
class EnsembleSession {
 public:
  using State = std::vector<Tensor<float>>;

  struct MemberInput {
    std::vector<int> src_ids;
    const FeatureMatrix* feats = nullptr;
  };

  EnsembleSession(std::span<const Checkpoint* const> members, std::span<const MemberInput> inputs);

  int vocab_size() const { return vocab_size_; }
  State initial_state();
  std::pair<State, LogProbs> step(const State& state, int prev_token);

 private:
  std::vector<ModelSession<float>> sessions_;
  int vocab_size_ = 0;
};

/// Argmax token per step (ties to the lowest id) until EOS or max_len tokens.
template <typename Session>
Hypothesis greedy_decode(Session& session, int max_len) {
  if (max_len < 1) throw ContractError("greedy_decode: max_len must be >= 1");
  Hypothesis hyp;
  auto state = session.initial_state();
  int prev = kBosId;
  while (static_cast<int>(hyp.ids.size()) < max_len) {
    auto [next_state, logp] = session.step(state, prev);
    Eigen::Index best = 0;
    for (Eigen::Index v = 1; v < logp.size(); ++v)
      if (logp[v] > logp[best]) best = v;
    hyp.ids.push_back(static_cast<int>(best));
    hyp.logp += logp[best];
    state = std::move(next_state);
    prev = static_cast<int>(best);
    if (prev == kEosId) {
      hyp.finished = true;
      break;
    }
  }
  return hyp;
}

struct BeamOptions {
  int beam = 5;
  int max_len = 50;
  bool length_normalize = true;
};

/// Beam search. Each step keeps the `beam` best extensions by total log
/// probability (ties: lexicographically smaller ids); extensions ending in
/// EOS, or reaching max_len, move to the completed pool. Search stops when
/// no live hypothesis can still beat the best completed one under the final
/// ranking rule. Returns the completed pool ranked best-first.
template <typename Session>
std::vector<Hypothesis> beam_search(Session& session, const BeamOptions& opt) {
  if (opt.beam < 1) throw ContractError("beam_search: beam must be >= 1");
  if (opt.max_len < 1) throw ContractError("beam_search: max_len must be >= 1");
  using State = typename Session::State;

  struct Live {
    Hypothesis hyp;
    State state;
  };
  struct Candidate {
    std::size_t parent;
    int token;
    double logp;
  };

  std::vector<Live> live;
  live.push_back({Hypothesis{}, session.initial_state()});
  std::vector<Hypothesis> done;

  for (int len = 1; len <= opt.max_len && !live.empty(); ++len) {
    std::vector<State> next_states;
    std::vector<Candidate> cands;
    next_states.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].hyp.ids.empty() ? kBosId : live[i].hyp.ids.back();
      auto [state, logp] = session.step(live[i].state, prev);
      next_states.push_back(std::move(state));
      for (Eigen::Index v = 0; v < logp.size(); ++v)
        cands.push_back({i, static_cast<int>(v), live[i].hyp.logp + logp[v]});
    }
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(opt.beam), cands.size());
    // Live hypotheses are already in (score, ids) order, so (parent, token)
    // order is lexicographic id order among equal-length candidates.
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [&live](const Candidate& a, const Candidate& b) {
                        if (a.logp != b.logp) return a.logp > b.logp;
                        if (a.parent != b.parent) return live[a.parent].hyp.ids < live[b.parent].hyp.ids;
                        return a.token < b.token;
                      });

    std::vector<Live> next_live;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& c = cands[k];
      Hypothesis h = live[c.parent].hyp;
      h.ids.push_back(c.token);
      h.logp = c.logp;
      if (c.token == kEosId || len == opt.max_len) {
        h.finished = c.token == kEosId;
        done.push_back(std::move(h));
      } else {
        next_live.push_back({std::move(h), next_states[c.parent]});
      }
    }
    live = std::move(next_live);

    if (!done.empty() && !live.empty()) {
      double best_done = -std::numeric_limits<double>::infinity();
      for (const auto& h : done) best_done = std::max(best_done, hypothesis_score(h, opt.length_normalize));
      // Log probabilities only fall as hypotheses grow, so a live prefix can
      // at best keep its logp; normalised by the longest admissible length
      // when that helps it most.
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& l : live) {
        const double bound = opt.length_normalize ? l.hyp.logp / static_cast<double>(opt.max_len) : l.hyp.logp;
        best_live = std::max(best_live, bound);
      }
      if (best_done > best_live) break;
    }
  }

  std::sort(done.begin(), done.end(), [&opt](const Hypothesis& a, const Hypothesis& b) {
    return ranks_before(a, b, opt.length_normalize);
  });
  return done;
}

/// 2 * src_len + 10, capped at max_tgt_len.
int default_max_len(int src_len, int max_tgt_len);

struct TranslateOptions {
  int beam = 5;
  int max_len = 0;  // 0: default_max_len per example
  bool length_normalize = true;
  int jobs = 1;
};

struct CorpusTranslation {
  std::vector<std::string> lines;            // one per input example, in order
  std::vector<std::vector<int>> token_ids;  // best hypothesis without EOS
  std::vector<std::string> errors;           // per-example failures, in input order
};

/// Decodes every example with one model or an ensemble of models sharing a
/// target vocabulary. Examples that cannot be decoded (e.g. a required
/// feature file is missing) yield an empty line and an entry in `errors`.
CorpusTranslation translate_corpus(std::span<const Checkpoint* const> members, std::span<const ParallelExample> data,
                                   Language tgt_lang, const TranslateOptions& options);

}  // namespace vgmt
