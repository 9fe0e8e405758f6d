#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidpred/loss/losses.hpp"
#include "vidpred/model/discriminator.hpp"
#include "vidpred/model/generator.hpp"
#include "vidpred/train/trainer.hpp"

namespace vidpred {

/// Fully-resolved settings for one run: data geometry, both networks, the
/// optimizer, the phase schedule and the metric backbone. Every command
/// echoes this (as JSON) into its output directory; rerunning from the echo
/// reproduces the run.
struct RunConfig {
  std::string preset = "desk";  // informational tag: desk | paper | custom
  int64_t frame_h = 64;
  int64_t frame_w = 80;
  int input_t = 8;

  std::vector<int64_t> gen_channels = {8, 16, 32, 64};
  std::vector<int64_t> gen_temporal_strides = {1, 2, 2, 2};
  double noise_rate = 0.5;
  bool noise_at_inference = true;

  std::vector<int> disc_stage_blocks = {1, 2, 2, 2, 2};
  std::vector<int64_t> disc_stage_channels = {8, 16, 32, 64, 128};

  std::string variant = "GAN-VGG";
  train::OptimizerSettings opt;
  ObjectiveWeights weights;

  // Durations. Explicit step counts win; -1 derives steps from epochs and
  // the training-set size (one epoch = ceil(n_samples / batch_size) updates).
  double phase1_epochs = 50.0;
  double phase2_epochs = 2.0;
  double phase3_epochs = 20.0;
  int64_t phase1_steps = -1;
  int64_t phase2_steps = -1;
  int64_t phase3_steps = -1;

  uint64_t seed = 0;
  bool augment = true;
  std::string backbone = "stub";  // stub | identity | pretrained
  std::string backbone_weights;   // weight file for pretrained mode
  uint64_t backbone_seed = 0;     // stub draw; fixed so runs stay comparable
  int64_t sample_every = 0;       // steps between sample strips; 0 = end only
  int64_t ckpt_every = 0;         // steps between checkpoints; 0 = end only
  int sn_check_every = 200;

  GeneratorConfig generator() const;
  DiscriminatorConfig discriminator() const;
  train::PhaseSchedule schedule(int64_t n_train_samples) const;
  void validate() const;

  std::string to_json() const;  // stable key order
  static RunConfig from_json(const std::string& text);

  static RunConfig desk();
  static RunConfig paper();
  static RunConfig by_name(const std::string& preset);
};

}  // namespace vidpred
