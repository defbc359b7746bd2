#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vgmt/dataset.hpp"
#include "vgmt/model.hpp"
#include "vgmt/optim.hpp"

namespace vgmt {

enum class EarlyStopMetric { ValidLoss, ValidBleu };

struct TrainOptions {
  AdamOptions adam;
  double clip_norm = 1.0;
  int batch_size = 512;
  int max_epochs = 100;
  int patience = 10;
  EarlyStopMetric metric = EarlyStopMetric::ValidLoss;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // per-token cross entropy, dropout active
  double valid_loss = 0.0;  // per-token cross entropy, dropout off
  double clipped_frac = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams<float> best_params;
  int best_epoch = 0;
  double best_metric = 0.0;
  std::vector<EpochLog> log;
  bool early_stopped = false;
};

/// Called after every epoch; `improved` is true when this epoch became the
/// new best and `params` are the current (best) weights.
using EpochCallback = std::function<void(const EpochLog& entry, bool improved, const ModelParams<float>& params)>;

/// Maps tokenised examples to id space: sources truncated to max_src_len,
/// targets to max_tgt_len - 1 tokens and wrapped in BOS ... EOS, features
/// read from the config's feat_key (skipped for text-only models) and cut to
/// max_feat_len rows. Throws FormatError for examples without a target or
/// source, or with a missing feature file.
std::vector<TrainingExample> make_training_examples(std::span<const ParallelExample> data, const Vocabulary& src_vocab,
                                                    const Vocabulary& tgt_vocab, const ModelConfig& config);

/// Per-token validation cross entropy.
double validation_loss(const ModelParams<float>& params, const ModelConfig& config,
                       std::span<const TrainingExample> data);

/// Greedy-decoding corpus BLEU against the examples' own targets.
double validation_bleu(const ModelParams<float>& params, const ModelConfig& config,
                       std::span<const TrainingExample> data);

/// Mini-batch training: seeded shuffle each epoch, then per batch forward,
/// backward, global-norm clipping and an Adam step. After each epoch the
/// validation metric drives early stopping and best-weight tracking.
/// Throws NumericError naming the batch if the loss becomes non-finite.
TrainResult train(const ModelConfig& config, const TrainOptions& options, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace vgmt
