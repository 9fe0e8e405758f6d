#include "vidpred/nn/adam.hpp"

#include <cmath>

namespace vidpred::nn {

void Adam::step(const std::vector<ParamRef>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& p : params) {
    auto& node = *p.var;
    if (!node.has_grad) continue;
    auto mit = m_.find(p.name);
    if (mit == m_.end()) {
      mit = m_.emplace(p.name, Tensor(node.value.shape())).first;
      v_.emplace(p.name, Tensor(node.value.shape()));
    }
    Tensor& m = mit->second;
    Tensor& v = v_.at(p.name);
    for (int64_t i = 0; i < node.value.size(); ++i) {
      const double g = node.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      node.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    node.zero_grad();
  }
}

}  // namespace vidpred::nn
