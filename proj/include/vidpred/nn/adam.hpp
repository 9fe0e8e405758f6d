#pragma once

#include <map>
#include <string>

#include "vidpred/nn/layers.hpp"

namespace vidpred::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Adam with moments keyed by parameter name so optimizer state survives
/// checkpointing by name.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

  /// Applies one update from var->grad and clears the grads.
  void step(const std::vector<ParamRef>& params);

  int64_t t() const { return t_; }
  std::map<std::string, Tensor>& m() { return m_; }
  std::map<std::string, Tensor>& v() { return v_; }
  void set_t(int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::map<std::string, Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace vidpred::nn
