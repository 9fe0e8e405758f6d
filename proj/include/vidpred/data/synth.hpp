#pragma once

#include "vidpred/data/dataset.hpp"

namespace vidpred::data {

/// Parameters of the synthetic panning-texture dataset. The background is a
/// band-limited periodic texture that translates horizontally (wrap-around)
/// by pan_velocity px/frame; sprites are soft discs moving independently.
struct SynthSpec {
  int64_t height = 64;
  int64_t width = 80;
  int n_sprites = 3;
  double pan_velocity = 2.0;        // global motion magnitude, px/frame
  double sprite_velocity_min = 0.5; // per-axis speed range, px/frame
  double sprite_velocity_max = 2.0;
  uint64_t texture_seed = 0;
  int64_t length = 20;              // frames per sequence
  int n_sequences = 8;
  std::string seq_prefix;           // distinguishes batches sharing one root

  void validate() const;
};

/// Deterministic given (spec, rng state). Sequence k is rendered from
/// texture/sprite draws that do not depend on pan_velocity, so runs that
/// differ only in velocity see identical content at different speeds.
std::vector<FrameSequence> synth_generate(const SynthSpec& spec, RngStream& rng);

/// Writes sequences in the frame-directory layout plus motion.json
/// ({sequence_id: pan_velocity}).
void synth_write(const SynthSpec& spec, const std::vector<FrameSequence>& seqs,
                 const std::string& out_dir);

}  // namespace vidpred::data
