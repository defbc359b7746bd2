#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vgmt/tensor.hpp"

namespace vgmt {

/// Uniform initialisation in [-a, a] with a = sqrt(6 / (rows + cols)).
template <typename Scalar, typename Rng>
Tensor<Scalar> glorot_parameter(Index rows, Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix<Scalar> v(rows, cols);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<Scalar>(dist(rng));
  return Tensor<Scalar>::parameter(std::move(v));
}

template <typename Scalar>
Tensor<Scalar> zero_parameter(Index rows, Index cols) {
  return Tensor<Scalar>::parameter(Matrix<Scalar>::Zero(rows, cols));
}

// ---------------------------------------------------------------------------
// GRU

/// One GRU direction. Input projections are (input_dim x hidden), state
/// projections (hidden x hidden), biases (1 x hidden).
template <typename Scalar>
struct GruParams {
  Tensor<Scalar> W_z, W_r, W_h;
  Tensor<Scalar> U_z, U_r, U_h;
  Tensor<Scalar> b_z, b_r, b_h;

  template <typename Rng>
  static GruParams init(Index input_dim, Index hidden, Rng& rng) {
    GruParams p;
    p.W_z = glorot_parameter<Scalar>(input_dim, hidden, rng);
    p.W_r = glorot_parameter<Scalar>(input_dim, hidden, rng);
    p.W_h = glorot_parameter<Scalar>(input_dim, hidden, rng);
    p.U_z = glorot_parameter<Scalar>(hidden, hidden, rng);
    p.U_r = glorot_parameter<Scalar>(hidden, hidden, rng);
    p.U_h = glorot_parameter<Scalar>(hidden, hidden, rng);
    p.b_z = zero_parameter<Scalar>(1, hidden);
    p.b_r = zero_parameter<Scalar>(1, hidden);
    p.b_h = zero_parameter<Scalar>(1, hidden);
    return p;
  }

  Index input_dim() const { return W_z.rows(); }
  Index hidden_dim() const { return U_z.rows(); }

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    f(prefix + ".W_z", W_z);
    f(prefix + ".W_r", W_r);
    f(prefix + ".W_h", W_h);
    f(prefix + ".U_z", U_z);
    f(prefix + ".U_r", U_r);
    f(prefix + ".U_h", U_h);
    f(prefix + ".b_z", b_z);
    f(prefix + ".b_r", b_r);
    f(prefix + ".b_h", b_h);
  }
};

/// z = sig(x W_z + h U_z + b_z), r = sig(x W_r + h U_r + b_r),
/// h~ = tanh(x W_h + (r*h) U_h + b_h), h' = (1 - z) * h + z * h~.
template <typename Scalar>
Tensor<Scalar> gru_cell_step(Graph<Scalar>& g, const Tensor<Scalar>& x, const Tensor<Scalar>& h,
                             const GruParams<Scalar>& p) {
  if (x.rows() != 1 || x.cols() != p.input_dim())
    throw DimensionError("gru_cell_step: input " + x.shape_string() + " vs W " + p.W_z.shape_string());
  if (h.rows() != 1 || h.cols() != p.hidden_dim())
    throw DimensionError("gru_cell_step: state " + h.shape_string() + " vs U " + p.U_z.shape_string());
  auto z = sigmoid(g, add(g, add(g, matmul(g, x, p.W_z), matmul(g, h, p.U_z)), p.b_z));
  auto r = sigmoid(g, add(g, add(g, matmul(g, x, p.W_r), matmul(g, h, p.U_r)), p.b_r));
  auto candidate = tanh(g, add(g, add(g, matmul(g, x, p.W_h), matmul(g, mul(g, r, h), p.U_h)), p.b_h));
  // (1 - z) * h + z * h~ == h + z * (h~ - h)
  return add(g, h, mul(g, z, sub(g, candidate, h)));
}

/// Bidirectional encoding with zero initial states. Row n of the result is
/// concat(forward state at n, backward state at n).
template <typename Scalar>
std::vector<Tensor<Scalar>> bigru_encode(Graph<Scalar>& g, const std::vector<Tensor<Scalar>>& inputs,
                                         const GruParams<Scalar>& fwd, const GruParams<Scalar>& bwd) {
  if (inputs.empty()) throw ContractError("bigru_encode: empty input sequence");
  const std::size_t n = inputs.size();
  std::vector<Tensor<Scalar>> forward(n), backward(n);
  auto h = Tensor<Scalar>::zeros(1, fwd.hidden_dim());
  for (std::size_t i = 0; i < n; ++i) forward[i] = h = gru_cell_step(g, inputs[i], h, fwd);
  h = Tensor<Scalar>::zeros(1, bwd.hidden_dim());
  for (std::size_t i = n; i-- > 0;) backward[i] = h = gru_cell_step(g, inputs[i], h, bwd);
  std::vector<Tensor<Scalar>> states;
  states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor<Scalar> pair[] = {forward[i], backward[i]};
    states.push_back(concat_cols<Scalar>(g, pair));
  }
  return states;
}

// ---------------------------------------------------------------------------
// Additive attention

template <typename Scalar>
struct AttentionParams {
  Tensor<Scalar> W_q;  // query_dim x att_dim
  Tensor<Scalar> W_k;  // key_dim x att_dim
  Tensor<Scalar> v_a;  // att_dim x 1
  Tensor<Scalar> b_a;  // 1 x att_dim

  template <typename Rng>
  static AttentionParams init(Index query_dim, Index key_dim, Index att_dim, Rng& rng) {
    AttentionParams p;
    p.W_q = glorot_parameter<Scalar>(query_dim, att_dim, rng);
    p.W_k = glorot_parameter<Scalar>(key_dim, att_dim, rng);
    p.v_a = glorot_parameter<Scalar>(att_dim, 1, rng);
    p.b_a = zero_parameter<Scalar>(1, att_dim);
    return p;
  }

  template <typename F>
  void for_each(const std::string& prefix, F&& f) {
    f(prefix + ".W_q", W_q);
    f(prefix + ".W_k", W_k);
    f(prefix + ".v_a", v_a);
    f(prefix + ".b_a", b_a);
  }
};

/// Keys stacked row-wise (N x key_dim) with their projection keys * W_k,
/// which is query independent and computed once per source.
template <typename Scalar>
struct AttentionMemory {
  Tensor<Scalar> keys;
  Tensor<Scalar> projected;

  bool empty() const { return !keys.defined() || keys.rows() == 0; }
};

template <typename Scalar>
AttentionMemory<Scalar> attention_memory(Graph<Scalar>& g, const Tensor<Scalar>& keys,
                                         const AttentionParams<Scalar>& p) {
  if (keys.rows() == 0) return {keys, Tensor<Scalar>()};
  if (keys.cols() != p.W_k.rows())
    throw DimensionError("attention: keys " + keys.shape_string() + " vs W_k " + p.W_k.shape_string());
  return {keys, matmul(g, keys, p.W_k)};
}

template <typename Scalar>
struct AttentionResult {
  Tensor<Scalar> context;  // 1 x key_dim
  Tensor<Scalar> weights;  // N x 1
};

/// e_n = v_a^T tanh(q W_q + k_n W_k + b_a); weights = softmax(e);
/// context = sum_n weights_n k_n. Keys double as values.
template <typename Scalar>
AttentionResult<Scalar> additive_attention(Graph<Scalar>& g, const Tensor<Scalar>& query,
                                           const AttentionMemory<Scalar>& memory,
                                           const AttentionParams<Scalar>& p) {
  if (memory.empty()) throw ContractError("additive_attention: no keys");
  if (query.rows() != 1 || query.cols() != p.W_q.rows())
    throw DimensionError("additive_attention: query " + query.shape_string() + " vs W_q " +
                         p.W_q.shape_string());
  auto q = add(g, matmul(g, query, p.W_q), p.b_a);
  auto energies = matmul(g, tanh(g, add_row_broadcast(g, memory.projected, q)), p.v_a);
  auto weights = softmax(g, energies);
  auto context = matmul(g, transpose(g, weights), memory.keys);
  return {context, weights};
}

template <typename Scalar>
AttentionResult<Scalar> additive_attention(Graph<Scalar>& g, const Tensor<Scalar>& query,
                                           const std::vector<Tensor<Scalar>>& keys,
                                           const AttentionParams<Scalar>& p) {
  if (keys.empty()) throw ContractError("additive_attention: no keys");
  return additive_attention(g, query, attention_memory(g, concat_rows<Scalar>(g, keys), p), p);
}

// ---------------------------------------------------------------------------
// Sinusoidal positional encoding

struct PositionalEncodingTable {
  Index max_len = 0;
  Index dim = 0;
  bool one_based = false;
  Matrix<double> table;  // max_len x dim
};

/// Row p holds sin(pos / 10000^(2i/d)) in column 2i and cos(...) in column 2i+1,
/// with pos = p (or p + 1 when one_based). An unpaired last column of an odd
/// dimension takes the sine branch.
PositionalEncodingTable positional_encoding(Index max_len, Index dim, bool one_based = false);

/// z + PE rows; z has T <= table.max_len rows and table.dim columns.
template <typename Derived>
Matrix<typename Derived::Scalar> add_positional_encoding(const Eigen::MatrixBase<Derived>& z,
                                                         const PositionalEncodingTable& pe) {
  using Scalar = typename Derived::Scalar;
  if (z.cols() != pe.dim)
    throw DimensionError("add_positional_encoding: feature dim " + std::to_string(z.cols()) +
                         " vs table dim " + std::to_string(pe.dim));
  if (z.rows() > pe.max_len)
    throw ContractError("add_positional_encoding: " + std::to_string(z.rows()) +
                        " rows exceed table length " + std::to_string(pe.max_len));
  Matrix<Scalar> out = z;
  out += pe.table.topRows(z.rows()).template cast<Scalar>();
  return out;
}

}  // namespace vgmt
