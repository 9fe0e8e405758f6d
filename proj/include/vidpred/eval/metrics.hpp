#pragma once

#include "vidpred/data/dataset.hpp"
#include "vidpred/loss/backbone.hpp"

namespace vidpred::eval {

/// Single-scale SSIM on (C,H,W) frames in [0,1]: 11x11 Gaussian window
/// (sigma 1.5), C1=(0.01)^2, C2=(0.03)^2 at L=1, valid-region window map,
/// per-channel then averaged.
double ssim(const Tensor& x, const Tensor& y);

/// Perceptual distance on (3,H,W) frames: per-site unit-normalized features,
/// squared differences weighted per channel by the backbone's lin
/// coefficients, spatially averaged, summed over blocks.
double perceptual_distance(const Tensor& x, const Tensor& y,
                           const PerceptualBackbone& backbone);

/// The trivial baseline: the last input frame repeated n_steps times.
data::FrameSequence copy_last_frame(const data::FrameSequence& clip,
                                    int64_t n_steps);

}  // namespace vidpred::eval
