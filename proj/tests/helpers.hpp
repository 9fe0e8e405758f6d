#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "vidpred/core/autograd.hpp"
#include "vidpred/core/rng.hpp"
#include "vidpred/core/tensor.hpp"

namespace vidpred::testing {

inline Tensor rand_tensor(std::vector<int64_t> shape, RngStream& rng,
                          double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// Largest relative autograd-vs-central-difference error over all elements
/// of all differentiable leaves. `build` must construct a scalar output from
/// the given leaves and must be deterministic (rebuild per probe).
inline double max_grad_err(
    const std::function<ag::Var(const std::vector<ag::Var>&)>& build,
    std::vector<ag::Var> leaves, double h = 1e-5) {
  ag::Var out = build(leaves);
  ag::backward(out);
  double worst = 0.0;
  for (auto& leaf : leaves) {
    if (!leaf->requires_grad) continue;
    for (int64_t i = 0; i < leaf->value.size(); ++i) {
      const double x0 = leaf->value[i];
      const double step = h * std::max(1.0, std::fabs(x0));
      leaf->value[i] = x0 + step;
      const double fp = ag::scalar(build(leaves));
      leaf->value[i] = x0 - step;
      const double fm = ag::scalar(build(leaves));
      leaf->value[i] = x0;
      const double fd = (fp - fm) / (2.0 * step);
      worst = std::max(worst, rel_err(leaf->grad[i], fd));
    }
  }
  return worst;
}

}  // namespace vidpred::testing
