#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vgmt/tensor.hpp"

namespace vgmt {

struct ParamGradCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  bool passed = true;
};

using ScalarFunction = std::function<Tensor<double>(Graph<double>&)>;

/// Compares reverse-mode gradients of `f` against central finite differences.
///
/// Per entry the error is |g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|).
/// `f` must rebuild its computation from the current parameter values on each
/// call and must be deterministic; a function whose value changes between two
/// identical evaluations (e.g. active dropout) is rejected with ContractError.
inline GradCheckReport grad_check(const ScalarFunction& f, std::span<NamedTensor<double>> params,
                                  double tolerance, double step = 1e-6) {
  for (auto& [name, t] : params) t.zero_grad();

  Graph<double> tape;
  auto loss = f(tape);
  if (loss.size() != 1) throw DimensionError("grad_check: function must return a scalar");
  const double reference = loss.item();
  tape.backward(loss);

  auto evaluate = [&f]() {
    Graph<double> g(false);
    return f(g).item();
  };
  if (evaluate() != reference)
    throw ContractError("grad_check: function is not deterministic (disable dropout)");

  GradCheckReport report;
  report.tolerance = tolerance;
  for (auto& [name, t] : params) {
    const Matrix<double> analytic = t.grad();
    ParamGradCheck entry{name, 0.0, true};
    auto& value = t.mutable_value();
    for (Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const double plus = evaluate();
      value.data()[i] = saved - step;
      const double minus = evaluate();
      value.data()[i] = saved;
      const double fd = (plus - minus) / (2.0 * step);
      const double ga = analytic.data()[i];
      const double denom = std::max({1.0, std::abs(ga), std::abs(fd)});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(ga - fd) / denom);
    }
    entry.passed = entry.max_rel_error < tolerance;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.passed = report.passed && entry.passed;
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace vgmt
