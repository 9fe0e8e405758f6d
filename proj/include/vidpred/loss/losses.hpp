#pragma once

#include <string>

#include "vidpred/loss/backbone.hpp"

namespace vidpred {

/// Which objective terms a run trains with. Non-adversarial variants skip
/// the GAN phases entirely.
enum class Variant { kGanVgg, kGVgg, kGanMae, kGMae };

bool variant_adversarial(Variant v);
bool variant_perceptual(Variant v);
std::string variant_name(Variant v);
Variant variant_parse(const std::string& name);

struct ObjectiveWeights {
  double adv = 1.0;
  double mae = 1000.0;
  double perceptual = 400.0;
};

/// Composite scalar plus its component breakdown (absent terms are 0 and
/// flagged). scalar == adv*w.adv + mae*w.mae + perceptual*w.perceptual.
struct LossValue {
  double scalar = 0.0;
  double adv = 0.0;
  double mae = 0.0;
  double perceptual = 0.0;
  bool has_adv = false;
  bool has_perceptual = false;
};

/// Mean absolute elementwise difference (resolution/batch invariant).
ag::Var mae_loss(const ag::Var& pred, const ag::Var& target);

/// Per-block: unit-normalize channel vectors at every site, sum squared
/// differences over channels, average over sites; blocks summed.
ag::Var perceptual_loss(const ag::Var& pred, const ag::Var& target,
                        const PerceptualBackbone& backbone);

/// mean(max(0, 1-real)) + mean(max(0, 1+fake)) over patch logits.
ag::Var hinge_loss_d(const ag::Var& real_logits, const ag::Var& fake_logits);

/// -mean(fake logits).
ag::Var hinge_loss_g(const ag::Var& fake_logits);

struct ObjectiveResult {
  ag::Var total;
  LossValue value;
};

/// Weighted generator objective. fake_logits may be null (non-GAN variants
/// or adv weight 0); the perceptual term is dropped for MAE-only variants.
ObjectiveResult generator_objective(const ag::Var& pred, const ag::Var& target,
                                    const ag::Var& fake_logits,
                                    const ObjectiveWeights& weights,
                                    const PerceptualBackbone* backbone,
                                    Variant variant);

}  // namespace vidpred
