#pragma once

#include <optional>
#include <vector>

#include "vidpred/nn/layers.hpp"

namespace vidpred {

struct DiscriminatorConfig {
  std::vector<int> stage_blocks = {1, 2, 2, 2, 2};
  std::vector<int64_t> stage_channels = {64, 128, 512, 1024, 2048};
  int64_t clip_t = 8;  // conditioning length; input gets clip_t + 1 frames
  bool spectral_norm = true;

  void validate() const;
  /// Patch-grid shape (rows, cols) for an input of H x W.
  std::array<int64_t, 2> patch_grid(int64_t h, int64_t w) const;

  static DiscriminatorConfig paper_scale();
  static DiscriminatorConfig desk_scale();
  static DiscriminatorConfig tiny();
};

/// Per-patch real/fake scores, shape (N, rows, cols).
struct PatchLogits {
  Tensor values;
};

/// Conditional patch critic over the temporal concatenation of the context
/// clip and one candidate frame. Residual stages (no normalization, spectral
/// weight normalization on every conv) each halve the spatial resolution;
/// time is mean-pooled before the scoring conv.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, uint64_t init_seed);

  /// clip: (N,3,clip_t,H,W); candidate: (N,3,1,H,W) -> (N,1,1,rows,cols).
  /// `update_u` advances the power iteration; true only on optimizer forwards.
  ag::Var forward(const ag::Var& clip, const ag::Var& candidate, bool update_u);

  /// No-grad convenience on single samples: (3,T,H,W) + (3,H,W).
  PatchLogits discriminate(const Tensor& clip, const Tensor& candidate);

  std::vector<nn::ParamRef> params();
  std::vector<nn::BufferRef> buffers();
  const DiscriminatorConfig& config() const { return cfg_; }

  /// Refine all power-iteration vectors (e.g. before bound audits).
  void power_iterate(int iters);
  /// Kernel-matrix sigma estimates, one per conv, in declaration order.
  std::vector<double> sigma_estimates() const;

 private:
  struct ResBlock {
    nn::SpectralConv3dLayer conv1, conv2;
    std::optional<nn::SpectralConv3dLayer> proj = std::nullopt;
    ag::Var apply(const ag::Var& x, bool sn, bool update_u);
  };

  DiscriminatorConfig cfg_;
  std::vector<std::vector<ResBlock>> stages_;
  nn::SpectralConv3dLayer score_;
};

}  // namespace vidpred
