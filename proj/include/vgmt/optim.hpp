#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "vgmt/tensor.hpp"

namespace vgmt {

template <typename Scalar>
double global_grad_norm(std::span<const NamedTensor<Scalar>> params) {
  double sq = 0.0;
  for (const auto& [name, t] : params)
    if (t.has_grad()) sq += t.grad().template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

/// Rescales all gradients jointly so their global L2 norm is at most
/// `max_norm`. Returns the factor applied (1 when no clipping happened).
template <typename Scalar>
double clip_gradients(std::span<NamedTensor<Scalar>> params, double max_norm = 1.0) {
  const double norm = global_grad_norm<Scalar>(params);
  if (!std::isfinite(norm)) throw NumericError("clip_gradients: non-finite gradient norm");
  if (norm <= max_norm) return 1.0;
  const double factor = max_norm / norm;
  for (auto& [name, t] : params)
    if (t.has_grad()) t.grad_buffer() *= static_cast<Scalar>(factor);
  return factor;
}

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamOptions options;
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  long step = 0;
};

/// One bias-corrected Adam update over `params`, using their accumulated
/// gradients (absent gradients count as zero). Moment buffers are created
/// on the first call.
template <typename Scalar>
void adam_step(std::span<NamedTensor<Scalar>> params, AdamState<Scalar>& st) {
  if (st.m.empty()) {
    for (const auto& [name, t] : params) {
      st.m.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
      st.v.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
    }
  }
  if (st.m.size() != params.size()) throw DimensionError("adam_step: optimizer state tracks a different parameter set");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& t = params[k].second;
    if (st.m[k].rows() != t.rows() || st.m[k].cols() != t.cols())
      throw DimensionError("adam_step: state shape mismatch for '" + params[k].first + "' " + t.shape_string());
  }

  ++st.step;
  const auto& o = st.options;
  const Scalar b1 = static_cast<Scalar>(o.beta1);
  const Scalar b2 = static_cast<Scalar>(o.beta2);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(o.beta1, static_cast<double>(st.step)));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(o.beta2, static_cast<double>(st.step)));
  const Scalar lr = static_cast<Scalar>(o.lr);
  const Scalar eps = static_cast<Scalar>(o.eps);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& t = params[k].second;
    const Matrix<Scalar> g = t.grad();
    auto& m = st.m[k];
    auto& v = st.v[k];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    const auto m_hat = (m.array() / correction1);
    const auto v_hat = (v.array() / correction2);
    t.mutable_value().array() -= lr * m_hat / (v_hat.sqrt() + eps);
  }
}

enum class EarlyStopDecision { Continue, Stop };

/// Lower-is-better validation tracking.
struct EarlyStopState {
  double best_metric = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int patience = 10;
  int epochs_since_best = 0;
};

/// Strict improvement resets the counter; otherwise it grows, and training
/// stops once it reaches `patience`.
inline EarlyStopDecision update_early_stop(EarlyStopState& st, double metric, int epoch) {
  if (!std::isfinite(metric)) throw NumericError("early stopping: non-finite validation metric");
  if (metric < st.best_metric) {
    st.best_metric = metric;
    st.best_epoch = epoch;
    st.epochs_since_best = 0;
    return EarlyStopDecision::Continue;
  }
  ++st.epochs_since_best;
  return st.epochs_since_best >= st.patience ? EarlyStopDecision::Stop : EarlyStopDecision::Continue;
}

}  // namespace vgmt
