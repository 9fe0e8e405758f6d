#pragma once

#include <optional>
#include <vector>

#include "vidpred/nn/layers.hpp"

namespace vidpred {

struct NoiseSpec {
  double rate = 0.5;
  std::vector<int> levels_applied;  // default: upper two levels
  bool active_at_inference = true;
};

struct GeneratorConfig {
  int levels = 4;
  std::vector<int64_t> channels = {64, 128, 256, 512};
  int64_t input_t = 8;
  std::vector<int64_t> temporal_strides = {1, 2, 2, 2};
  NoiseSpec noise;

  /// Channel width of the top-down output of level l (1-based).
  int64_t td_channels(int level) const;
  /// Temporal extent of u_l after the bottom-up sweep (level 0 = input_t).
  int64_t temporal_extent(int level) const;
  /// Valid temporal kernel sizes for the three lateral blocks of a level,
  /// chosen so the chain collapses the extent to exactly 1.
  std::array<int64_t, 3> lateral_kernels(int level) const;
  bool noise_at(int level) const;

  void validate() const;

  static GeneratorConfig paper_scale();
  static GeneratorConfig desk_scale();
  static GeneratorConfig tiny();  // for gradient checks and fast tests
};

/// Per-level shapes recorded during a forward pass (for contract checks).
struct ForwardTrace {
  std::vector<std::vector<int64_t>> u_shapes;  // index 0 = input clip
  std::vector<std::vector<int64_t>> s_shapes;  // 1-based levels, [0] unused
  std::vector<std::vector<int64_t>> d_shapes;
};

/// Hierarchical residual prediction network. Each level owns a bottom-up
/// block, three lateral blocks and two top-down blocks; level predictions
/// are merged top-down and decoded to the next frame through a sigmoid head.
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, uint64_t init_seed);

  /// clip: (N,3,T,H,W) -> (N,3,1,H,W), values in (0,1).
  ag::Var forward(const ag::Var& clip, RngStream* noise_rng, bool training,
                  ForwardTrace* trace = nullptr);

  /// Single-clip eval-mode convenience: (3,T,H,W) -> (3,H,W).
  Tensor predict(const Tensor& clip, RngStream* noise_rng = nullptr);

  /// Recursive multi-step prediction; step k feeds the last input_t frames
  /// of clip ++ predictions back in. Returns (3,n_steps,H,W).
  Tensor rollout(const Tensor& clip, int n_steps, RngStream* noise_rng = nullptr);

  std::vector<nn::ParamRef> params();
  std::vector<nn::BufferRef> buffers();
  const GeneratorConfig& config() const { return cfg_; }

  /// True when noise is injected anywhere (used to decide eval determinism).
  bool noise_enabled() const { return noise_on_; }
  void set_noise_enabled(bool on) { noise_on_ = on; }

  ag::Var head_weight() { return head_.weight(); }
  ag::Var head_bias() { return head_.bias(); }

 private:
  struct Block {
    nn::Conv3dLayer conv;
    nn::BatchNorm3dLayer bn;
    std::optional<nn::Conv3dLayer> proj = std::nullopt;  // skip projection when shapes change
    bool tail_skip = false;               // LAT: temporal-crop skip
    bool pre_shuffle = false;             // TD upscale: PS r=2 ahead of the conv
    bool noisy = false;                   // dropout before the closing ReLU
    ag::Var apply(const ag::Var& x, bool training, RngStream* noise_rng,
                  double noise_rate, bool noise_active);
  };

  void check_clip_shape(const std::vector<int64_t>& s) const;

  GeneratorConfig cfg_;
  bool noise_on_ = true;
  std::vector<Block> bu_;                 // [level-1]
  std::vector<std::array<Block, 3>> lat_;
  std::vector<std::array<Block, 2>> td_;
  nn::Conv3dLayer head_;
};

}  // namespace vidpred
