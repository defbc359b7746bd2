#include "vgmt/train.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "vgmt/bleu.hpp"
#include "vgmt/decode.hpp"

namespace vgmt {

std::vector<TrainingExample> make_training_examples(std::span<const ParallelExample> data, const Vocabulary& src_vocab,
                                                    const Vocabulary& tgt_vocab, const ModelConfig& config) {
  std::vector<TrainingExample> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    if (ex.src_tokens.empty()) throw FormatError("example '" + ex.id + "': empty source sentence");
    if (!ex.has_tgt || ex.tgt_tokens.empty()) throw FormatError("example '" + ex.id + "': missing target sentence");
    TrainingExample te;
    te.src_ids = lookup(src_vocab, ex.src_tokens);
    if (static_cast<int>(te.src_ids.size()) > config.max_src_len)
      te.src_ids.resize(static_cast<std::size_t>(config.max_src_len));
    te.tgt_ids.push_back(kBosId);
    for (int id : lookup(tgt_vocab, ex.tgt_tokens)) {
      if (static_cast<int>(te.tgt_ids.size()) >= config.max_tgt_len) break;
      te.tgt_ids.push_back(id);
    }
    te.tgt_ids.push_back(kEosId);
    if (!config.text_only) {
      auto it = ex.feat_paths.find(config.feat_key);
      if (it == ex.feat_paths.end())
        throw FormatError("example '" + ex.id + "': no \"" + config.feat_key + "\" feature file");
      auto feats = read_feature_file(it->second);
      if (feats.rows() > config.max_feat_len) feats.conservativeResize(config.max_feat_len, feats.cols());
      te.feats = std::make_shared<const FeatureMatrix>(std::move(feats));
    }
    out.push_back(std::move(te));
  }
  return out;
}

double validation_loss(const ModelParams<float>& params, const ModelConfig& config,
                       std::span<const TrainingExample> data) {
  if (data.empty()) throw ContractError("validation_loss: empty validation set");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : data) {
    Graph<float> g(false);
    const std::span<const TrainingExample> one(&ex, 1);
    const auto n = target_token_count(one);
    total += static_cast<double>(sequence_loss(g, one, params, config).item()) * static_cast<double>(n);
    tokens += n;
  }
  return total / static_cast<double>(tokens);
}

double validation_bleu(const ModelParams<float>& params, const ModelConfig& config,
                       std::span<const TrainingExample> data) {
  std::vector<TokenList> hyps;
  std::vector<std::vector<TokenList>> refs;
  auto as_tokens = [](std::span<const int> ids) {
    TokenList t;
    for (int id : ids) t.push_back(std::to_string(id));
    return t;
  };
  for (const auto& ex : data) {
    ModelSession<float> session(params, config, ex.src_ids, ex.feats.get());
    const int max_len = default_max_len(static_cast<int>(ex.src_ids.size()), config.max_tgt_len);
    hyps.push_back(as_tokens(output_tokens(greedy_decode(session, max_len))));
    const std::span<const int> gold(ex.tgt_ids);
    refs.push_back({as_tokens(gold.subspan(1, gold.size() - 2))});
  }
  return corpus_bleu4(hyps, refs).bleu;
}

TrainResult train(const ModelConfig& config, const TrainOptions& options, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, std::uint64_t seed, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw ContractError("train: empty training set");
  if (valid_set.empty()) throw ContractError("train: empty validation set");
  if (options.batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  config.validate();

  Rng init_rng(seed);
  Rng data_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  auto params = ModelParams<float>::init(config, init_rng);
  auto handles = params.named();
  AdamState<float> adam;
  adam.options = options.adam;
  EarlyStopState stop;
  stop.patience = options.patience;

  TrainResult result;
  result.best_params = params.clone();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), data_rng);

    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    std::size_t batches = 0, clipped = 0;
    std::vector<TrainingExample> batch;
    for (std::size_t first = 0; first < order.size(); first += batch_size) {
      batch.clear();
      for (std::size_t i = first; i < std::min(order.size(), first + batch_size); ++i) batch.push_back(train_set[order[i]]);

      Graph<float> g;
      auto loss = sequence_loss<float>(g, batch, params, config, &data_rng);
      const double value = loss.item();
      if (!std::isfinite(value))
        throw NumericError("train: non-finite loss in epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batches));
      params.zero_grad();
      g.backward(loss);
      const double factor = clip_gradients<float>(handles, options.clip_norm);
      adam_step<float>(handles, adam);

      const auto n = target_token_count(batch);
      loss_sum += value * static_cast<double>(n);
      token_sum += n;
      ++batches;
      if (factor < 1.0) ++clipped;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(token_sum);
    entry.valid_loss = validation_loss(params, config, valid_set);
    entry.clipped_frac = static_cast<double>(clipped) / static_cast<double>(batches);
    const double metric =
        options.metric == EarlyStopMetric::ValidLoss ? entry.valid_loss : -validation_bleu(params, config, valid_set);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const auto decision = update_early_stop(stop, metric, epoch);
    const bool improved = stop.best_epoch == epoch;
    if (improved) {
      result.best_params = params.clone();
      result.best_epoch = epoch;
      result.best_metric = metric;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry, improved, improved ? result.best_params : params);
    if (decision == EarlyStopDecision::Stop) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace vgmt
