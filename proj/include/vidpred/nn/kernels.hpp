#pragma once

#include <array>

#include "vidpred/core/tensor.hpp"

namespace vidpred::nn {

/// Raw forward/backward numerics on 5-D activations (N,C,T,H,W).
/// Autograd ops wrap these; metrics and other no-grad paths call them
/// directly so there is a single implementation per operation.

using Stride3 = std::array<int64_t, 3>;  // (t,h,w)
using Pad3 = std::array<int64_t, 3>;

std::vector<int64_t> conv3d_out_shape(const std::vector<int64_t>& x_shape,
                                      const std::vector<int64_t>& w_shape,
                                      const Stride3& stride, const Pad3& pad);

/// x: (N,Ci,T,H,W), w: (Co,Ci,kT,kH,kW), bias: (Co) or empty.
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                      const Stride3& stride, const Pad3& pad);
Tensor conv3d_backward_input(const Tensor& gy, const Tensor& w,
                             const std::vector<int64_t>& x_shape,
                             const Stride3& stride, const Pad3& pad);
Tensor conv3d_backward_weight(const Tensor& gy, const Tensor& x,
                              const std::vector<int64_t>& w_shape,
                              const Stride3& stride, const Pad3& pad);
Tensor conv3d_backward_bias(const Tensor& gy);

struct BnStats {
  Tensor mean;    // (C)
  Tensor invstd;  // (C)
};

/// Batch statistics over (N,T,H,W) per channel.
BnStats bn_batch_stats(const Tensor& x, double eps);
Tensor bn_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  const BnStats& stats);
/// Returns gx; accumulates parameter grads into ggamma/gbeta (shape (C)).
Tensor bn_backward(const Tensor& gy, const Tensor& x, const Tensor& gamma,
                   const BnStats& stats, Tensor& ggamma, Tensor& gbeta);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& gy, const Tensor& x);
Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& gy, const Tensor& y);

enum class ShuffleMode { kChannelToSpace, kSpaceToChannel, kChannelToTime, kTimeToChannel };

/// Subpixel rearrangement with factor r. kChannelToSpace maps
/// (N,C*r^2,T,H,W) -> (N,C,T,H*r,W*r) in the standard interleaved layout;
/// the other modes are its inverse and the channel<->time analogues.
Tensor pixel_shuffle(const Tensor& x, ShuffleMode mode, int64_t r);
ShuffleMode shuffle_inverse(ShuffleMode mode);

/// 2x2 spatial average pooling, stride 2; trailing odd row/col dropped.
Tensor avgpool_hw2_forward(const Tensor& x);
Tensor avgpool_hw2_backward(const Tensor& gy, const std::vector<int64_t>& x_shape);

/// Mean over the temporal axis, keeping T=1.
Tensor mean_t_forward(const Tensor& x);
Tensor mean_t_backward(const Tensor& gy, const std::vector<int64_t>& x_shape);

Tensor concat_axis(const Tensor& a, const Tensor& b, int axis);
/// Backward slices of concat_axis: the range [lo,hi) along `axis`.
Tensor slice_axis(const Tensor& x, int axis, int64_t lo, int64_t hi);

/// Keep the last t_out temporal steps.
Tensor tail_t_forward(const Tensor& x, int64_t t_out);
Tensor tail_t_backward(const Tensor& gy, const std::vector<int64_t>& x_shape);

/// Unit-normalize the channel vector at each (n,t,h,w) site:
/// y_c = x_c / (||x||_2 + eps).
Tensor site_normalize_forward(const Tensor& x, double eps);
Tensor site_normalize_backward(const Tensor& gy, const Tensor& x, double eps);

/// Weight-as-matrix helpers for spectral normalization. The kernel
/// (Co,Ci,kT,kH,kW) is viewed as a (Co, Ci*kT*kH*kW) matrix.
void sn_mat_vec(const Tensor& w, const Tensor& v, Tensor& out_u);
void sn_matt_vec(const Tensor& w, const Tensor& u, Tensor& out_v);
void l2_normalize_vec(Tensor& v, double eps = 1e-12);

}  // namespace vidpred::nn
