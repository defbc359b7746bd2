#include "vgmt/decode.hpp"

#include <map>
#include <thread>

namespace vgmt {

LogProbs ensemble_step(std::span<const LogProbs> members) {
  if (members.empty()) throw ContractError("ensemble_step: no members");
  const auto vocab = members.front().size();
  for (const auto& m : members)
    if (m.size() != vocab) throw ContractError("ensemble_step: members disagree on vocabulary size");
  const double log_k = std::log(static_cast<double>(members.size()));
  LogProbs out(vocab);
  for (Eigen::Index v = 0; v < vocab; ++v) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& m : members) top = std::max(top, m[v]);
    if (top == -std::numeric_limits<double>::infinity()) {
      out[v] = top;
      continue;
    }
    double total = 0.0;
    for (const auto& m : members) total += std::exp(m[v] - top);
    // Identical members give total == k exactly, so the bracket vanishes.
    out[v] = top + (std::log(total) - log_k);
  }
  return out;
}

EnsembleSession::EnsembleSession(std::span<const Checkpoint* const> members, std::span<const MemberInput> inputs) {
  if (members.empty()) throw ContractError("ensemble: no members");
  if (members.size() != inputs.size()) throw ContractError("ensemble: one input per member required");
  vocab_size_ = members.front()->config.vocab_tgt;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (!(members[k]->tgt_vocab == members.front()->tgt_vocab))
      throw ContractError("ensemble: members must share the target vocabulary");
    sessions_.emplace_back(members[k]->params, members[k]->config, inputs[k].src_ids, inputs[k].feats);
  }
}

EnsembleSession::State EnsembleSession::initial_state() {
  State s;
  s.reserve(sessions_.size());
  for (auto& m : sessions_) s.push_back(m.initial_state());
  return s;
}

std::pair<EnsembleSession::State, LogProbs> EnsembleSession::step(const State& state, int prev_token) {
  State next;
  std::vector<LogProbs> dists;
  next.reserve(sessions_.size());
  dists.reserve(sessions_.size());
  for (std::size_t k = 0; k < sessions_.size(); ++k) {
    auto [s, lp] = sessions_[k].step(state[k], prev_token);
    next.push_back(std::move(s));
    dists.push_back(std::move(lp));
  }
  return {std::move(next), ensemble_step(dists)};
}

int default_max_len(int src_len, int max_tgt_len) { return std::max(1, std::min(2 * src_len + 10, max_tgt_len)); }

namespace {

struct Outcome {
  std::string line;
  std::vector<int> ids;
  std::string error;
};

Outcome translate_one(std::span<const Checkpoint* const> members, const ParallelExample& ex, Language tgt_lang,
                      const TranslateOptions& opt) {
  Outcome out;
  try {
    if (ex.src_tokens.empty()) throw ContractError("empty source sentence");
    std::map<std::string, FeatureMatrix> loaded;
    std::vector<EnsembleSession::MemberInput> inputs;
    int max_tgt_len = std::numeric_limits<int>::max();
    int max_src_len = std::numeric_limits<int>::max();
    for (const auto* m : members) {
      const auto& c = m->config;
      max_tgt_len = std::min(max_tgt_len, c.max_tgt_len);
      max_src_len = std::min(max_src_len, c.max_src_len);
      EnsembleSession::MemberInput in;
      in.src_ids = lookup(m->src_vocab, ex.src_tokens);
      if (static_cast<int>(in.src_ids.size()) > c.max_src_len) in.src_ids.resize(static_cast<std::size_t>(c.max_src_len));
      if (!c.text_only) {
        auto it = ex.feat_paths.find(c.feat_key);
        if (it == ex.feat_paths.end()) throw FormatError("no \"" + c.feat_key + "\" feature file given");
        auto cached = loaded.find(c.feat_key);
        if (cached == loaded.end()) {
          std::error_code ec;
          if (!std::filesystem::exists(it->second, ec))
            throw FormatError("missing feature file '" + it->second.string() + "'");
          auto feats = read_feature_file(it->second);
          if (feats.rows() > c.max_feat_len) feats.conservativeResize(c.max_feat_len, feats.cols());
          cached = loaded.emplace(c.feat_key, std::move(feats)).first;
        }
        in.feats = &cached->second;
      }
      inputs.push_back(std::move(in));
    }
    const int src_len = std::min(static_cast<int>(ex.src_tokens.size()), max_src_len);
    BeamOptions bo;
    bo.beam = opt.beam;
    bo.max_len = opt.max_len > 0 ? std::min(opt.max_len, max_tgt_len) : default_max_len(src_len, max_tgt_len);
    bo.length_normalize = opt.length_normalize;
    EnsembleSession session(members, inputs);
    auto nbest = beam_search(session, bo);
    out.ids = output_tokens(nbest.front());
    out.line = join_tokens(detokenize(members.front()->tgt_vocab, out.ids), tgt_lang);
  } catch (const Error& e) {
    out.line.clear();
    out.ids.clear();
    out.error = ex.id + ": " + e.what();
  }
  return out;
}

}  // namespace

CorpusTranslation translate_corpus(std::span<const Checkpoint* const> members, std::span<const ParallelExample> data,
                                   Language tgt_lang, const TranslateOptions& options) {
  if (members.empty()) throw ContractError("translate_corpus: no models");
  for (const auto* m : members)
    if (!(m->tgt_vocab == members.front()->tgt_vocab))
      throw ContractError("translate_corpus: ensemble members must share the target vocabulary");
  if (options.beam < 1) throw ContractError("translate_corpus: beam must be >= 1");

  std::vector<Outcome> outcomes(data.size());
  const auto jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  auto worker = [&](std::size_t first) {
    for (std::size_t i = first; i < data.size(); i += jobs)
      outcomes[i] = translate_one(members, data[i], tgt_lang, options);
  };
  if (jobs == 1 || data.size() < 2) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  CorpusTranslation result;
  for (auto& o : outcomes) {
    result.lines.push_back(std::move(o.line));
    result.token_ids.push_back(std::move(o.ids));
    if (!o.error.empty()) result.errors.push_back(std::move(o.error));
  }
  return result;
}

}  // namespace vgmt
