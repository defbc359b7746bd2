#pragma once

// Dense tensors with tape-based reverse-mode differentiation.
//
// Every value is a row-major Eigen matrix; vectors are 1 x n rows. A Graph
// records one backward closure per executed op and replays them in reverse.
// Ops only record when the graph is recording and at least one input
// requires a gradient, so inference builds no tape at all.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vgmt/error.hpp"

namespace vgmt {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
class Tensor {
 public:
  using Mat = Matrix<Scalar>;

  Tensor() = default;

  static Tensor constant(Mat value) { return Tensor(std::move(value), false); }
  static Tensor parameter(Mat value) { return Tensor(std::move(value), true); }
  static Tensor zeros(Index rows, Index cols, bool requires_grad = false) {
    return Tensor(Mat::Zero(rows, cols), requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  bool requires_grad() const { return impl_->requires_grad; }

  Index rows() const { return impl_->value.rows(); }
  Index cols() const { return impl_->value.cols(); }
  Index size() const { return impl_->value.size(); }
  std::vector<Index> shape() const { return {rows(), cols()}; }
  std::string shape_string() const {
    std::ostringstream os;
    os << '[' << rows() << 'x' << cols() << ']';
    return os.str();
  }

  const Mat& value() const { return impl_->value; }
  Mat& mutable_value() { return impl_->value; }
  Scalar item() const {
    if (size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_string());
    return impl_->value(0, 0);
  }

  bool has_grad() const { return impl_->grad.size() != 0; }
  /// Gradient buffer; a zero matrix of the value's shape if nothing has accumulated.
  Mat grad() const { return has_grad() ? impl_->grad : Mat::Zero(rows(), cols()); }
  // Gradient mutation is allowed through const handles: a Tensor is a shared
  // reference to its storage, and backward closures hold const copies.
  void zero_grad() const {
    if (has_grad()) impl_->grad.setZero();
  }
  Mat& grad_buffer() const {
    if (!has_grad()) impl_->grad = Mat::Zero(rows(), cols());
    return impl_->grad;
  }

  template <typename Derived>
  void accumulate_grad(const Eigen::MatrixBase<Derived>& g) const {
    if (!impl_->requires_grad) return;
    grad_buffer() += g;
  }

  /// Identity of the underlying storage (copies of a Tensor share it).
  const void* id() const { return impl_.get(); }

 private:
  struct Impl {
    Mat value;
    Mat grad;
    bool requires_grad = false;
  };

  Tensor(Mat value, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    impl_->value = std::move(value);
    impl_->requires_grad = requires_grad;
  }

  std::shared_ptr<Impl> impl_;
};

template <typename Scalar>
using NamedTensor = std::pair<std::string, Tensor<Scalar>>;

/// Execution-ordered tape of backward rules. One graph per forward pass.
template <typename Scalar>
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return tape_.size(); }

  void record(std::function<void()> rule) { tape_.push_back(std::move(rule)); }

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
  void backward(Tensor<Scalar>& loss) {
    if (loss.size() != 1) throw DimensionError("backward: loss must be scalar, got " + loss.shape_string());
    if (!loss.requires_grad()) return;
    loss.grad_buffer()(0, 0) += Scalar(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  }

 private:
  bool recording_;
  std::vector<std::function<void()>> tape_;
};

namespace detail {

template <typename Scalar>
bool needs_grad(const Graph<Scalar>& g, std::initializer_list<const Tensor<Scalar>*> inputs) {
  if (!g.recording()) return false;
  for (const auto* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

template <typename Scalar>
bool needs_grad(const Graph<Scalar>& g, std::span<const Tensor<Scalar>> inputs) {
  if (!g.recording()) return false;
  for (const auto& t : inputs)
    if (t.requires_grad()) return true;
  return false;
}

template <typename Scalar>
Tensor<Scalar> result(Matrix<Scalar> value, bool requires_grad) {
  return requires_grad ? Tensor<Scalar>::parameter(std::move(value))
                       : Tensor<Scalar>::constant(std::move(value));
}

template <typename Scalar>
void require_same_shape(const char* op, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
}

template <typename Scalar>
void require_finite(const char* op, const Tensor<Scalar>& a) {
  if (!a.value().allFinite()) throw NumericError(std::string(op) + ": non-finite input");
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace detail

template <typename Scalar>
Tensor<Scalar> matmul(Graph<Scalar>& g, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions differ " + a.shape_string() + " x " + b.shape_string());
  const bool track = detail::needs_grad(g, {&a, &b});
  auto out = detail::result<Scalar>(a.value() * b.value(), track);
  if (track) {
    g.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& dc = out.grad_buffer();
      a.accumulate_grad(dc * b.value().transpose());
      b.accumulate_grad(a.value().transpose() * dc);
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> add(Graph<Scalar>& g, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape("add", a, b);
  const bool track = detail::needs_grad(g, {&a, &b});
  auto out = detail::result<Scalar>(a.value() + b.value(), track);
  if (track) {
    g.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad(out.grad_buffer());
      b.accumulate_grad(out.grad_buffer());
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> sub(Graph<Scalar>& g, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape("sub", a, b);
  const bool track = detail::needs_grad(g, {&a, &b});
  auto out = detail::result<Scalar>(a.value() - b.value(), track);
  if (track) {
    g.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad(out.grad_buffer());
      b.accumulate_grad(-out.grad_buffer());
    });
  }
  return out;
}

/// Sum of any number of same-shaped tensors.
template <typename Scalar>
Tensor<Scalar> add_n(Graph<Scalar>& g, std::span<const Tensor<Scalar>> terms) {
  if (terms.empty()) throw ContractError("add_n: no terms");
  Matrix<Scalar> acc = terms.front().value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    detail::require_same_shape("add_n", terms.front(), terms[i]);
    acc += terms[i].value();
  }
  const bool track = detail::needs_grad(g, terms);
  auto out = detail::result<Scalar>(std::move(acc), track);
  if (track) {
    std::vector<Tensor<Scalar>> inputs(terms.begin(), terms.end());
    g.record([inputs = std::move(inputs), out]() mutable {
      if (!out.has_grad()) return;
      for (auto& t : inputs) t.accumulate_grad(out.grad_buffer());
    });
  }
  return out;
}

/// Elementwise product.
template <typename Scalar>
Tensor<Scalar> mul(Graph<Scalar>& g, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape("mul", a, b);
  const bool track = detail::needs_grad(g, {&a, &b});
  auto out = detail::result<Scalar>(a.value().cwiseProduct(b.value()), track);
  if (track) {
    g.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& d = out.grad_buffer();
      a.accumulate_grad(d.cwiseProduct(b.value()));
      b.accumulate_grad(d.cwiseProduct(a.value()));
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> scale(Graph<Scalar>& g, const Tensor<Scalar>& a, Scalar factor) {
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(a.value() * factor, track);
  if (track) {
    g.record([a, out, factor]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad(out.grad_buffer() * factor);
    });
  }
  return out;
}

/// m (r x c) plus the row vector `row` (1 x c) added to every row.
template <typename Scalar>
Tensor<Scalar> add_row_broadcast(Graph<Scalar>& g, const Tensor<Scalar>& m, const Tensor<Scalar>& row) {
  if (row.rows() != 1 || row.cols() != m.cols())
    throw DimensionError("add_row_broadcast: " + m.shape_string() + " + " + row.shape_string());
  const bool track = detail::needs_grad(g, {&m, &row});
  Matrix<Scalar> v = m.value();
  v.rowwise() += row.value().row(0);
  auto out = detail::result<Scalar>(std::move(v), track);
  if (track) {
    g.record([m, row, out]() mutable {
      if (!out.has_grad()) return;
      const auto& d = out.grad_buffer();
      m.accumulate_grad(d);
      row.accumulate_grad(d.colwise().sum());
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> transpose(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(a.value().transpose(), track);
  if (track) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad(out.grad_buffer().transpose());
    });
  }
  return out;
}

/// Stacks tensors with equal column counts vertically.
template <typename Scalar>
Tensor<Scalar> concat_rows(Graph<Scalar>& g, std::span<const Tensor<Scalar>> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols)
      throw DimensionError("concat_rows: column mismatch " + parts.front().shape_string() + " vs " +
                           p.shape_string());
    rows += p.rows();
  }
  Matrix<Scalar> v(rows, cols);
  Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  const bool track = detail::needs_grad(g, parts);
  auto out = detail::result<Scalar>(std::move(v), track);
  if (track) {
    std::vector<Tensor<Scalar>> inputs(parts.begin(), parts.end());
    g.record([inputs = std::move(inputs), out]() mutable {
      if (!out.has_grad()) return;
      const auto& d = out.grad_buffer();
      Index r = 0;
      for (auto& p : inputs) {
        p.accumulate_grad(d.middleRows(r, p.rows()));
        r += p.rows();
      }
    });
  }
  return out;
}

/// Joins tensors with equal row counts side by side.
template <typename Scalar>
Tensor<Scalar> concat_cols(Graph<Scalar>& g, std::span<const Tensor<Scalar>> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Index cols = 0;
  const Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw DimensionError("concat_cols: row mismatch " + parts.front().shape_string() + " vs " +
                           p.shape_string());
    cols += p.cols();
  }
  Matrix<Scalar> v(rows, cols);
  Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  const bool track = detail::needs_grad(g, parts);
  auto out = detail::result<Scalar>(std::move(v), track);
  if (track) {
    std::vector<Tensor<Scalar>> inputs(parts.begin(), parts.end());
    g.record([inputs = std::move(inputs), out]() mutable {
      if (!out.has_grad()) return;
      const auto& d = out.grad_buffer();
      Index c = 0;
      for (auto& p : inputs) {
        p.accumulate_grad(d.middleCols(c, p.cols()));
        c += p.cols();
      }
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> slice_rows(Graph<Scalar>& g, const Tensor<Scalar>& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows())
    throw IndexError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + a.shape_string());
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(a.value().middleRows(begin, count), track);
  if (track) {
    g.record([a, out, begin, count]() mutable {
      if (!out.has_grad()) return;
      if (!a.requires_grad()) return;
      a.grad_buffer().middleRows(begin, count) += out.grad_buffer();
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> tanh(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(a.value().array().tanh().matrix(), track);
  if (track) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& y = out.value().array();
      a.accumulate_grad((out.grad_buffer().array() * (Scalar(1) - y * y)).matrix());
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> sigmoid(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(a.value().unaryExpr(&detail::stable_sigmoid<Scalar>), track);
  if (track) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& y = out.value().array();
      a.accumulate_grad((out.grad_buffer().array() * y * (Scalar(1) - y)).matrix());
    });
  }
  return out;
}

/// Softmax over all entries of a vector (either orientation); shape preserved.
template <typename Scalar>
Tensor<Scalar> softmax(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  if (a.size() == 0) throw DimensionError("softmax: empty input");
  detail::require_finite("softmax", a);
  const Scalar m = a.value().maxCoeff();
  Matrix<Scalar> e = (a.value().array() - m).exp().matrix();
  e /= e.sum();
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(std::move(e), track);
  if (track) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& y = out.value();
      const auto& dy = out.grad_buffer();
      const Scalar dot = dy.cwiseProduct(y).sum();
      a.accumulate_grad((y.array() * (dy.array() - dot)).matrix());
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> log_softmax(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  if (a.size() == 0) throw DimensionError("log_softmax: empty input");
  detail::require_finite("log_softmax", a);
  const Scalar m = a.value().maxCoeff();
  const Scalar lse = m + std::log((a.value().array() - m).exp().sum());
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>((a.value().array() - lse).matrix(), track);
  if (track) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& dy = out.grad_buffer();
      const Scalar total = dy.sum();
      a.accumulate_grad((dy.array() - out.value().array().exp() * total).matrix());
    });
  }
  return out;
}

/// Row `id` of an embedding table, as a 1 x d tensor.
template <typename Scalar>
Tensor<Scalar> embedding(Graph<Scalar>& g, const Tensor<Scalar>& table, int id) {
  if (id < 0 || id >= table.rows())
    throw IndexError("embedding: id " + std::to_string(id) + " out of range for table " +
                     table.shape_string());
  const bool track = detail::needs_grad(g, {&table});
  auto out = detail::result<Scalar>(table.value().row(id), track);
  if (track) {
    g.record([table, out, id]() mutable {
      if (!out.has_grad()) return;
      if (!table.requires_grad()) return;
      table.grad_buffer().row(id) += out.grad_buffer().row(0);
    });
  }
  return out;
}

/// Inverted dropout. Survivors are scaled by 1/(1-rate); identity at inference.
template <typename Scalar, typename Rng>
Tensor<Scalar> dropout(Graph<Scalar>& g, const Tensor<Scalar>& a, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ContractError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return a;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Scalar keep_scale = Scalar(1.0 / (1.0 - rate));
  Matrix<Scalar> mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = unit(rng) < rate ? Scalar(0) : keep_scale;
  const bool track = detail::needs_grad(g, {&a});
  auto out = detail::result<Scalar>(a.value().cwiseProduct(mask), track);
  if (track) {
    g.record([a, out, mask = std::move(mask)]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad(out.grad_buffer().cwiseProduct(mask));
    });
  }
  return out;
}

/// -log softmax(logits)[target] as a 1 x 1 tensor.
template <typename Scalar>
Tensor<Scalar> cross_entropy(Graph<Scalar>& g, const Tensor<Scalar>& logits, int target) {
  if (logits.size() == 0) throw DimensionError("cross_entropy: empty logits");
  if (target < 0 || target >= logits.size())
    throw IndexError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     logits.shape_string());
  detail::require_finite("cross_entropy", logits);
  const auto& x = logits.value();
  const Scalar m = x.maxCoeff();
  const Scalar lse = m + std::log((x.array() - m).exp().sum());
  Matrix<Scalar> loss(1, 1);
  loss(0, 0) = lse - x.data()[target];
  const bool track = detail::needs_grad(g, {&logits});
  auto out = detail::result<Scalar>(std::move(loss), track);
  if (track) {
    g.record([logits, out, target, lse]() mutable {
      if (!out.has_grad()) return;
      const Scalar d = out.grad_buffer()(0, 0);
      Matrix<Scalar> probs = (logits.value().array() - lse).exp().matrix();
      probs.data()[target] -= Scalar(1);
      logits.accumulate_grad(probs * d);
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> sum(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  const bool track = detail::needs_grad(g, {&a});
  Matrix<Scalar> v(1, 1);
  v(0, 0) = a.value().sum();
  auto out = detail::result<Scalar>(std::move(v), track);
  if (track) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad(Matrix<Scalar>::Constant(a.rows(), a.cols(), out.grad_buffer()(0, 0)));
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> mean(Graph<Scalar>& g, const Tensor<Scalar>& a) {
  if (a.size() == 0) throw DimensionError("mean: empty input");
  return scale(g, sum(g, a), Scalar(1) / static_cast<Scalar>(a.size()));
}

/// Copies a tensor's value into another scalar type as a fresh leaf.
template <typename To, typename From>
Tensor<To> cast_leaf(const Tensor<From>& t) {
  Matrix<To> v = t.value().template cast<To>();
  return t.requires_grad() ? Tensor<To>::parameter(std::move(v)) : Tensor<To>::constant(std::move(v));
}

}  // namespace vgmt
