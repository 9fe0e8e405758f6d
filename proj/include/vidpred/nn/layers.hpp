#pragma once

#include <array>
#include <string>
#include <vector>

#include "vidpred/core/autograd.hpp"
#include "vidpred/core/rng.hpp"
#include "vidpred/nn/kernels.hpp"

namespace vidpred::nn {

struct ParamRef {
  std::string name;
  ag::Var var;
};

/// Persistent non-trainable state (BN running stats, spectral-norm u).
struct BufferRef {
  std::string name;
  Tensor* tensor;
};

using Kernel3 = std::array<int64_t, 3>;

/// 3-D convolution layer; weights are fan-in-scaled normal, bias zero.
class Conv3dLayer {
 public:
  Conv3dLayer() = default;
  Conv3dLayer(std::string name, int64_t c_in, int64_t c_out, Kernel3 kernel,
              Stride3 stride, Pad3 pad, RngStream& init, bool bias = true);

  ag::Var operator()(const ag::Var& x) const;
  void collect(std::vector<ParamRef>& params, std::vector<BufferRef>& bufs);

  const std::string& name() const { return name_; }
  ag::Var weight() const { return w_; }
  ag::Var bias() const { return b_; }
  Stride3 stride() const { return stride_; }
  Pad3 pad() const { return pad_; }

 protected:
  std::string name_;
  ag::Var w_, b_;
  Stride3 stride_{1, 1, 1};
  Pad3 pad_{0, 0, 0};
};

/// Conv with spectral weight normalization (one power-iteration step per
/// training forward; u persists as a buffer).
class SpectralConv3dLayer : public Conv3dLayer {
 public:
  SpectralConv3dLayer() = default;
  SpectralConv3dLayer(std::string name, int64_t c_in, int64_t c_out,
                      Kernel3 kernel, Stride3 stride, Pad3 pad, RngStream& init,
                      bool bias = true);

  /// `update_u` should be true only during optimization forwards.
  ag::Var forward(const ag::Var& x, bool update_u);
  void collect(std::vector<ParamRef>& params, std::vector<BufferRef>& bufs);

  /// Extra power-iteration refinement of u (no graph), e.g. before bound checks.
  void power_iterate(int iters);
  /// Current largest-singular-value estimate of the raw kernel matrix.
  double sigma_estimate() const;

 private:
  Tensor compute_v(const Tensor& u) const;
  Tensor u_;
};

class BatchNorm3dLayer {
 public:
  BatchNorm3dLayer() = default;
  BatchNorm3dLayer(std::string name, int64_t channels);

  ag::Var operator()(const ag::Var& x, bool training);
  void collect(std::vector<ParamRef>& params, std::vector<BufferRef>& bufs);

 private:
  std::string name_;
  ag::Var gamma_, beta_;
  Tensor running_mean_, running_var_;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
};

/// Fan-in-scaled normal init used by every conv in the project.
Tensor he_init(const std::vector<int64_t>& w_shape, RngStream& rng);

}  // namespace vidpred::nn
