#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vidpred/data/dataset.hpp"
#include "vidpred/loss/losses.hpp"
#include "vidpred/model/discriminator.hpp"
#include "vidpred/model/generator.hpp"
#include "vidpred/nn/adam.hpp"

namespace vidpred::train {

struct OptimizerSettings {
  double beta1 = 0.0;
  double beta2 = 0.9;
  int batch_size = 8;
  double lr_phase1_g = 1e-4;
  double lr_phase2_d = 1e-4;
  double lr_phase3_g = 2e-5;
  double lr_phase3_d = 1e-4;
  int d_updates_per_g = 8;
  bool clip_gradients = false;  // divergence-guard aid, off by default
  double clip_norm = 10.0;

  void validate() const;
};

struct PhaseSchedule {
  int64_t phase1_steps = 0;  // G updates
  int64_t phase2_steps = 0;  // D updates
  int64_t phase3_steps = 0;  // G updates (each preceded by d_updates_per_g D updates)
  Variant variant = Variant::kGanVgg;

  void validate() const;
};

/// One optimizer update's log line. role is "G" or "D".
struct StepLog {
  int phase = 1;
  int64_t step = 0;  // per-phase update counter for the role
  std::string role;
  LossValue g;       // G rows
  double d_loss = 0.0;  // D rows
};

/// Aborts a run when a loss goes non-finite; carries the dump location.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A checkpoint whose architecture or entries disagree with the model built
/// from the active config.
struct CheckpointMismatch : std::runtime_error {
  explicit CheckpointMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// Raw meta JSON of a checkpoint file (validates the format tag).
std::string checkpoint_meta(const std::string& path);

/// Loads generator parameters and buffers from a training checkpoint into a
/// freshly constructed model. Architecture disagreement -> CheckpointMismatch.
void load_generator(const std::string& path, Generator& gen);

struct TrainerConfig {
  OptimizerSettings opt;
  PhaseSchedule schedule;
  ObjectiveWeights weights;
  uint64_t seed = 0;
  bool augment = true;           // horizontal flips
  std::string log_path;          // log.jsonl when non-empty
  int sn_check_every = 200;      // D updates between spectral-bound audits
};

/// Owns the optimization state for one run: three-phase schedule, logging,
/// divergence guard, deterministic checkpoint/resume.
class Trainer {
 public:
  /// disc may be null for non-adversarial variants; backbone may be null for
  /// MAE-only variants.
  Trainer(Generator& gen, Discriminator* disc, const PerceptualBackbone* backbone,
          const data::ClipDataset& data, const TrainerConfig& cfg);

  void train_phase1(int64_t steps);
  void train_phase2(int64_t steps);
  void train_phase3(int64_t g_steps);
  /// Full schedule for the configured variant (non-GAN: phase 1 only).
  void run();

  void checkpoint_save(const std::string& path);
  void checkpoint_load(const std::string& path);

  const std::vector<StepLog>& log() const { return log_; }
  int64_t phase_steps(int phase) const;
  const TrainerConfig& config() const { return cfg_; }

 private:
  struct Batch {
    ag::Var clip;    // (N,3,8,H,W)
    ag::Var target;  // (N,3,1,H,W)
  };
  Batch next_batch();
  void g_update(int phase, double lr, bool adversarial);
  void d_update(int phase, double lr);
  void guard_finite(double v, const char* what);
  void append_log(const StepLog& entry);
  void sn_audit();

  Generator& gen_;
  Discriminator* disc_;
  const PerceptualBackbone* backbone_;
  const data::ClipDataset& data_;
  TrainerConfig cfg_;
  nn::Adam opt_g_, opt_d_;
  RngStream data_rng_, noise_rng_;
  std::vector<StepLog> log_;
  int64_t done_[4] = {0, 0, 0, 0};  // [phase] update counters
};

}  // namespace vidpred::train
