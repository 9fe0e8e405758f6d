#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vidpred/core/rng.hpp"
#include "vidpred/core/tensor.hpp"
#include "vidpred/nn/kernels.hpp"

namespace vidpred::ag {

/// Reverse-mode tape node. Graphs are built per forward pass and discarded
/// after backward; leaves (parameters) persist across steps.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool has_grad = false;
  int64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void zero_grad() {
    if (has_grad) grad.fill(0.0);
  }
};

using Var = std::shared_ptr<Node>;

Var leaf(Tensor value, bool requires_grad = false);
inline Var constant(Tensor value) { return leaf(std::move(value), false); }

/// Adds g into n's grad buffer if n participates in differentiation.
void accumulate(Node& n, const Tensor& g);

/// Backpropagate from a scalar root (size-1 tensor), seeding d root = 1.
void backward(const Var& root);

// ---- ops ----

Var conv3d(const Var& x, const Var& w, const Var& b, const nn::Stride3& stride,
           const nn::Pad3& pad);

/// Batch norm. In training mode uses batch statistics and, when running
/// stats are supplied, folds them in with `momentum`; in eval mode uses the
/// running stats as fixed affine constants.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, bool training,
               Tensor* running_mean, Tensor* running_var, double momentum,
               double eps);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var abs(const Var& x);

/// Inverted dropout; `active` false is the identity. Mask values are drawn
/// from `rng` at graph-construction time.
Var dropout(const Var& x, double rate, RngStream& rng, bool active);

Var pixel_shuffle(const Var& x, nn::ShuffleMode mode, int64_t r);
Var avgpool_hw2(const Var& x);
Var mean_t(const Var& x);
Var concat(const Var& a, const Var& b, int axis);
Var tail_t(const Var& x, int64_t t_out);
Var site_normalize(const Var& x, double eps);

/// Spectral weight normalization: value = w / (u^T W v) with u, v treated
/// as constants; the backward includes the rank-one sigma term.
Var sn_normalize(const Var& w, const Tensor& u, const Tensor& v);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// Elementwise a*x + b with scalar coefficients.
Var affine(const Var& x, double a, double b);

/// Scalar reductions (outputs have shape {1}).
Var mean_all(const Var& x);
Var sum_scaled(const Var& x, double scale);

/// c0 + sum_i coeffs[i] * scalars[i]; all scalars shape {1}.
Var weighted_sum(const std::vector<Var>& scalars,
                 const std::vector<double>& coeffs, double c0 = 0.0);

inline double scalar(const Var& v) { return v->value[0]; }

}  // namespace vidpred::ag
