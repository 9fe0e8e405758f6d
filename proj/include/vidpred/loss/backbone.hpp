#pragma once

#include <string>
#include <vector>

#include "vidpred/core/autograd.hpp"

namespace vidpred {

/// Fixed (never trained) convolutional feature extractor used by the
/// perceptual loss and the perceptual-distance metric. Each block is a run
/// of 3x3 conv+ReLU layers; blocks are separated by 2x average pooling and
/// tapped at their last activation. Weights come either from a data file or
/// from a seeded random stub (the hermetic test backbone). An identity
/// backbone (features = input) is available for hand-computable oracles.
class PerceptualBackbone {
 public:
  /// phi(x) = x, single block.
  static PerceptualBackbone identity();
  /// Seeded 3-block random stub; deterministic per seed.
  static PerceptualBackbone random_stub(uint64_t seed);
  /// Arbitrary layout with seeded weights (block i = conv widths list).
  static PerceptualBackbone random_with_layout(
      std::vector<std::vector<int64_t>> blocks, uint64_t seed);
  static PerceptualBackbone load(const std::string& path);
  void save(const std::string& path) const;

  /// frame (N,3,1,H,W) -> one activation volume per block. Differentiable
  /// w.r.t. the frame; backbone weights are constants.
  std::vector<ag::Var> features(const ag::Var& frame) const;
  /// No-grad path on raw tensors (metric use).
  std::vector<Tensor> features_raw(const Tensor& frame) const;

  size_t n_blocks() const;
  int64_t block_channels(size_t block) const;

  /// Per-channel metric coefficients ("lin" weights), uniform 1/C by default.
  const Tensor& lin_weights(size_t block) const { return lin_[block]; }
  void set_lin_weights(size_t block, Tensor w);

  /// Multiplies every emitted feature map by s (scale-invariance testing).
  void set_output_scale(double s) { output_scale_ = s; }

  bool is_identity() const { return identity_; }

 private:
  PerceptualBackbone() = default;
  void init_lin_uniform();

  struct ConvW {
    Tensor w;  // (Co,Ci,1,3,3)
    Tensor b;  // (Co)
  };
  bool identity_ = false;
  std::vector<std::vector<ConvW>> blocks_;
  std::vector<Tensor> lin_;
  double output_scale_ = 1.0;
};

}  // namespace vidpred
