#pragma once

// Bidirectional-GRU text encoder, position-aware auxiliary feature sequence,
// and a two-GRU decoder whose context is a learned mixture of a text context
// and a feature context (attention over attentions).

#include <json.hpp>

#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vgmt/features.hpp"
#include "vgmt/layers.hpp"
#include "vgmt/vocab.hpp"

namespace vgmt {

using Rng = std::mt19937_64;

struct ModelConfig {
  int vocab_src = 0;
  int vocab_tgt = 0;
  int d_emb = 1024;
  int d_h = 512;  // per encoder direction
  int d_dec = 512;
  int d_feat = 1024;
  int d_common = 512;
  int d_att = 512;
  double dropout = 0.5;
  int max_src_len = 100;
  int max_feat_len = 256;
  int max_tgt_len = 100;
  /// Add sinusoidal position codes to feature rows before attention.
  bool use_pe = true;
  /// Number positions from 1 instead of 0.
  bool pe_one_based = false;
  /// Ignore features entirely; fusion runs over the text modality alone.
  bool text_only = false;
  /// Dataset key this model reads its feature file from.
  std::string feat_key = "feat";
  /// Preprocessing of source / target text ("en" or "zh").
  std::string src_lang = "en";
  std::string tgt_lang = "en";

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json model_config_to_json(const ModelConfig& c);
/// Strict: every key must be known; missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

template <typename Scalar>
struct ModelParams;

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& from);

template <typename Scalar>
struct ModelParams {
  Tensor<Scalar> src_embed;  // vocab_src x d_emb
  Tensor<Scalar> tgt_embed;  // vocab_tgt x d_emb
  GruParams<Scalar> enc_fwd, enc_bwd;
  GruParams<Scalar> dec_proposal;  // input: previous target embedding
  GruParams<Scalar> dec_output;    // input: fused context
  AttentionParams<Scalar> att_text, att_video;
  Tensor<Scalar> fusion_W1;       // d_dec x d_common, shared by modalities
  Tensor<Scalar> fusion_o;        // d_common x 1
  Tensor<Scalar> fusion_U_text;   // 2 d_h x d_common
  Tensor<Scalar> fusion_U_video;  // d_feat x d_common
  Tensor<Scalar> fusion_Q_text;   // 2 d_h x d_common
  Tensor<Scalar> fusion_Q_video;  // d_feat x d_common
  Tensor<Scalar> out_W;           // d_dec x vocab_tgt
  Tensor<Scalar> out_b;           // 1 x vocab_tgt
  Tensor<Scalar> bridge_W;        // 2 d_h x d_dec
  Tensor<Scalar> bridge_b;        // 1 x d_dec

  static ModelParams init(const ModelConfig& c, Rng& rng) {
    c.validate();
    ModelParams p;
    p.src_embed = glorot_parameter<Scalar>(c.vocab_src, c.d_emb, rng);
    p.tgt_embed = glorot_parameter<Scalar>(c.vocab_tgt, c.d_emb, rng);
    p.enc_fwd = GruParams<Scalar>::init(c.d_emb, c.d_h, rng);
    p.enc_bwd = GruParams<Scalar>::init(c.d_emb, c.d_h, rng);
    p.dec_proposal = GruParams<Scalar>::init(c.d_emb, c.d_dec, rng);
    p.dec_output = GruParams<Scalar>::init(c.d_common, c.d_dec, rng);
    p.att_text = AttentionParams<Scalar>::init(c.d_dec, 2 * c.d_h, c.d_att, rng);
    p.att_video = AttentionParams<Scalar>::init(c.d_dec, c.d_feat, c.d_att, rng);
    p.fusion_W1 = glorot_parameter<Scalar>(c.d_dec, c.d_common, rng);
    p.fusion_o = glorot_parameter<Scalar>(c.d_common, 1, rng);
    p.fusion_U_text = glorot_parameter<Scalar>(2 * c.d_h, c.d_common, rng);
    p.fusion_U_video = glorot_parameter<Scalar>(c.d_feat, c.d_common, rng);
    p.fusion_Q_text = glorot_parameter<Scalar>(2 * c.d_h, c.d_common, rng);
    p.fusion_Q_video = glorot_parameter<Scalar>(c.d_feat, c.d_common, rng);
    p.out_W = glorot_parameter<Scalar>(c.d_dec, c.vocab_tgt, rng);
    p.out_b = zero_parameter<Scalar>(1, c.vocab_tgt);
    p.bridge_W = glorot_parameter<Scalar>(2 * c.d_h, c.d_dec, rng);
    p.bridge_b = zero_parameter<Scalar>(1, c.d_dec);
    return p;
  }

  /// Visits every trainable tensor exactly once, in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    f("src_embed", src_embed);
    f("tgt_embed", tgt_embed);
    enc_fwd.for_each("enc_fwd", f);
    enc_bwd.for_each("enc_bwd", f);
    dec_proposal.for_each("dec_proposal", f);
    dec_output.for_each("dec_output", f);
    att_text.for_each("att_text", f);
    att_video.for_each("att_video", f);
    f("fusion.W1", fusion_W1);
    f("fusion.o", fusion_o);
    f("fusion.U_text", fusion_U_text);
    f("fusion.U_video", fusion_U_video);
    f("fusion.Q_text", fusion_Q_text);
    f("fusion.Q_video", fusion_Q_video);
    f("out.W", out_W);
    f("out.b", out_b);
    f("bridge.W", bridge_W);
    f("bridge.b", bridge_b);
  }

  /// Handles that share storage with this model's tensors.
  std::vector<NamedTensor<Scalar>> named() const {
    std::vector<NamedTensor<Scalar>> out;
    const_cast<ModelParams*>(this)->for_each(
        [&out](const std::string& name, Tensor<Scalar>& t) { out.emplace_back(name, t); });
    return out;
  }

  void zero_grad() {
    for_each([](const std::string&, Tensor<Scalar>& t) { t.zero_grad(); });
  }

  /// Deep copy; the result shares no storage with this model.
  ModelParams clone() const { return cast_params<Scalar>(*this); }
};

/// Converts every parameter to another scalar type as fresh leaves.
template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& from) {
  auto source = from.named();
  ModelParams<To> out;
  std::size_t i = 0;
  out.for_each([&](const std::string&, Tensor<To>& t) { t = cast_leaf<To>(source[i++].second); });
  return out;
}

template <typename Scalar>
struct EncodedSource {
  Tensor<Scalar> h;      // N x 2 d_h
  Tensor<Scalar> z_hat;  // T x d_feat; undefined when no features are used
  AttentionMemory<Scalar> text;
  AttentionMemory<Scalar> video;
  Index src_len = 0;
  Index feat_len = 0;
};

/// A training pair in id space; tgt_ids is wrapped in BOS ... EOS.
struct TrainingExample {
  std::vector<int> src_ids;
  std::vector<int> tgt_ids;
  std::shared_ptr<const FeatureMatrix> feats;
};

namespace detail {

template <typename Scalar>
Tensor<Scalar> maybe_dropout(Graph<Scalar>& g, const Tensor<Scalar>& x, const ModelConfig& c, Rng* rng) {
  if (rng == nullptr) return x;
  return dropout(g, x, c.dropout, *rng, true);
}

}  // namespace detail

/// Position-aware feature rows: z + PE (or z alone when use_pe is off).
Matrix<double> feature_states(const FeatureMatrix& feats, const ModelConfig& c);

/// `rng` non-null selects training mode (dropout active).
template <typename Scalar>
EncodedSource<Scalar> encode(Graph<Scalar>& g, std::span<const int> src_ids, const FeatureMatrix* feats,
                             const ModelParams<Scalar>& p, const ModelConfig& c, Rng* rng = nullptr) {
  if (src_ids.empty()) throw ContractError("encode: empty source sentence");
  if (static_cast<int>(src_ids.size()) > c.max_src_len)
    throw ContractError("encode: source length " + std::to_string(src_ids.size()) + " exceeds max_src_len " +
                        std::to_string(c.max_src_len));
  std::vector<Tensor<Scalar>> embeds;
  embeds.reserve(src_ids.size());
  for (int id : src_ids) embeds.push_back(detail::maybe_dropout(g, embedding(g, p.src_embed, id), c, rng));

  EncodedSource<Scalar> enc;
  enc.h = concat_rows<Scalar>(g, bigru_encode(g, embeds, p.enc_fwd, p.enc_bwd));
  enc.src_len = enc.h.rows();
  enc.text = attention_memory(g, enc.h, p.att_text);

  if (feats != nullptr && !c.text_only && feats->rows() > 0) {
    if (feats->rows() > c.max_feat_len)
      throw ContractError("encode: " + std::to_string(feats->rows()) + " feature rows exceed max_feat_len " +
                          std::to_string(c.max_feat_len));
    enc.z_hat = Tensor<Scalar>::constant(feature_states(*feats, c).template cast<Scalar>());
    enc.feat_len = enc.z_hat.rows();
    enc.video = attention_memory(g, enc.z_hat, p.att_video);
  }
  return enc;
}

template <typename Scalar>
struct FusionResult {
  Tensor<Scalar> context;  // 1 x d_common
  Tensor<Scalar> alpha;    // 1 x (number of modalities)
};

/// e_m = o^T tanh(s W1 + c_m U_m); alpha = softmax(e); context = sum_m alpha_m c_m Q_m.
/// An undefined `c_video` fuses over the text modality alone.
template <typename Scalar>
FusionResult<Scalar> modality_fusion(Graph<Scalar>& g, const Tensor<Scalar>& s, const Tensor<Scalar>& c_text,
                                     const Tensor<Scalar>& c_video, const ModelParams<Scalar>& p) {
  auto shared = matmul(g, s, p.fusion_W1);
  auto energy = [&](const Tensor<Scalar>& c, const Tensor<Scalar>& U) {
    return matmul(g, tanh(g, add(g, shared, matmul(g, c, U))), p.fusion_o);
  };
  std::vector<Tensor<Scalar>> energies{energy(c_text, p.fusion_U_text)};
  std::vector<Tensor<Scalar>> projected{matmul(g, c_text, p.fusion_Q_text)};
  if (c_video.defined()) {
    energies.push_back(energy(c_video, p.fusion_U_video));
    projected.push_back(matmul(g, c_video, p.fusion_Q_video));
  }
  auto alpha = softmax(g, concat_cols<Scalar>(g, energies));
  return {matmul(g, alpha, concat_rows<Scalar>(g, projected)), alpha};
}

/// tanh(mean_n(h_n) W_bridge + b_bridge).
template <typename Scalar>
Tensor<Scalar> init_decoder_state(Graph<Scalar>& g, const EncodedSource<Scalar>& enc, const ModelParams<Scalar>& p) {
  if (enc.src_len < 1) throw ContractError("init_decoder_state: empty encoder states");
  auto averager = Tensor<Scalar>::constant(
      Matrix<Scalar>::Constant(1, enc.src_len, Scalar(1) / static_cast<Scalar>(enc.src_len)));
  return tanh(g, add(g, matmul(g, matmul(g, averager, enc.h), p.bridge_W), p.bridge_b));
}

template <typename Scalar>
struct DecoderOutput {
  Tensor<Scalar> state;   // s^_j, 1 x d_dec
  Tensor<Scalar> scores;  // logits (decoder_logits) or log-probabilities (decoder_step)
  Tensor<Scalar> alpha;   // modality weights
};

template <typename Scalar>
DecoderOutput<Scalar> decoder_logits(Graph<Scalar>& g, int prev_id, const Tensor<Scalar>& state_prev,
                                     const EncodedSource<Scalar>& enc, const ModelParams<Scalar>& p,
                                     const ModelConfig& c, Rng* rng = nullptr) {
  if (enc.text.empty()) throw ContractError("decoder_step: empty encoder states");
  auto w = detail::maybe_dropout(g, embedding(g, p.tgt_embed, prev_id), c, rng);
  auto proposal = gru_cell_step(g, w, state_prev, p.dec_proposal);
  auto c_text = additive_attention(g, proposal, enc.text, p.att_text).context;
  Tensor<Scalar> c_video;
  if (!enc.video.empty()) c_video = additive_attention(g, proposal, enc.video, p.att_video).context;
  auto fused = modality_fusion(g, proposal, c_text, c_video, p);
  auto state = gru_cell_step(g, fused.context, proposal, p.dec_output);
  auto readout = detail::maybe_dropout(g, state, c, rng);
  auto logits = add(g, matmul(g, readout, p.out_W), p.out_b);
  return {state, logits, fused.alpha};
}

/// One decoding step; `scores` holds log p(y_j | y_<j).
template <typename Scalar>
DecoderOutput<Scalar> decoder_step(Graph<Scalar>& g, int prev_id, const Tensor<Scalar>& state_prev,
                                   const EncodedSource<Scalar>& enc, const ModelParams<Scalar>& p,
                                   const ModelConfig& c, Rng* rng = nullptr) {
  auto out = decoder_logits(g, prev_id, state_prev, enc, p, c, rng);
  out.scores = log_softmax(g, out.scores);
  return out;
}

/// Teacher-forced cross entropy averaged over every predicted target token
/// in the batch. Each example builds its own subgraph, so no padding exists.
template <typename Scalar>
Tensor<Scalar> sequence_loss(Graph<Scalar>& g, std::span<const TrainingExample> batch, const ModelParams<Scalar>& p,
                             const ModelConfig& c, Rng* rng = nullptr) {
  if (batch.empty()) throw ContractError("sequence_loss: empty batch");
  std::vector<Tensor<Scalar>> terms;
  for (const auto& ex : batch) {
    const auto& tgt = ex.tgt_ids;
    if (tgt.size() < 2 || tgt.front() != kBosId || tgt.back() != kEosId)
      throw ContractError("sequence_loss: target must be wrapped in BOS ... EOS");
    auto enc = encode(g, ex.src_ids, ex.feats.get(), p, c, rng);
    auto state = init_decoder_state(g, enc, p);
    for (std::size_t j = 1; j < tgt.size(); ++j) {
      auto step = decoder_logits(g, tgt[j - 1], state, enc, p, c, rng);
      terms.push_back(cross_entropy(g, step.scores, tgt[j]));
      state = step.state;
    }
  }
  return scale(g, add_n<Scalar>(g, terms), Scalar(1) / static_cast<Scalar>(terms.size()));
}

/// Number of predicted tokens sequence_loss averages over.
std::size_t target_token_count(std::span<const TrainingExample> batch);

}  // namespace vgmt
