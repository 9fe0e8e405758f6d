#include "vidpred/loss/losses.hpp"

#include <stdexcept>

namespace vidpred {
namespace {
constexpr double kNormEps = 1e-10;
}

bool variant_adversarial(Variant v) {
  return v == Variant::kGanVgg || v == Variant::kGanMae;
}

bool variant_perceptual(Variant v) {
  return v == Variant::kGanVgg || v == Variant::kGVgg;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kGanVgg: return "GAN-VGG";
    case Variant::kGVgg: return "G-VGG";
    case Variant::kGanMae: return "GAN-MAE";
    case Variant::kGMae: return "G-MAE";
  }
  return "?";
}

Variant variant_parse(const std::string& name) {
  if (name == "GAN-VGG") return Variant::kGanVgg;
  if (name == "G-VGG") return Variant::kGVgg;
  if (name == "GAN-MAE") return Variant::kGanMae;
  if (name == "G-MAE") return Variant::kGMae;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (GAN-VGG | G-VGG | GAN-MAE | G-MAE)");
}

ag::Var mae_loss(const ag::Var& pred, const ag::Var& target) {
  check_same_shape(pred->value, target->value, "mae_loss");
  return ag::mean_all(ag::abs(ag::sub(pred, target)));
}

ag::Var perceptual_loss(const ag::Var& pred, const ag::Var& target,
                        const PerceptualBackbone& backbone) {
  check_same_shape(pred->value, target->value, "perceptual_loss");
  const auto fp = backbone.features(pred);
  const auto ft = backbone.features(target);
  ag::Var total;
  for (size_t l = 0; l < fp.size(); ++l) {
    ag::Var np = ag::site_normalize(fp[l], kNormEps);
    ag::Var nt = ag::site_normalize(ft[l], kNormEps);
    ag::Var d = ag::sub(np, nt);
    ag::Var sq = ag::mul(d, d);
    // channel sum at each site, averaged over all sites (N*T*H*W)
    const auto& s = sq->value.shape();
    const double n_sites =
        static_cast<double>(s[0]) * static_cast<double>(s[2]) *
        static_cast<double>(s[3]) * static_cast<double>(s[4]);
    ag::Var term = ag::sum_scaled(sq, 1.0 / n_sites);
    total = total ? ag::add(total, term) : term;
  }
  return total;
}

ag::Var hinge_loss_d(const ag::Var& real_logits, const ag::Var& fake_logits) {
  if (!real_logits->value.all_finite() || !fake_logits->value.all_finite())
    throw std::invalid_argument("hinge_loss_d: non-finite logits");
  ag::Var real_term = ag::mean_all(ag::relu(ag::affine(real_logits, -1.0, 1.0)));
  ag::Var fake_term = ag::mean_all(ag::relu(ag::affine(fake_logits, 1.0, 1.0)));
  return ag::add(real_term, fake_term);
}

ag::Var hinge_loss_g(const ag::Var& fake_logits) {
  if (!fake_logits->value.all_finite())
    throw std::invalid_argument("hinge_loss_g: non-finite logits");
  return ag::affine(ag::mean_all(fake_logits), -1.0, 0.0);
}

ObjectiveResult generator_objective(const ag::Var& pred, const ag::Var& target,
                                    const ag::Var& fake_logits,
                                    const ObjectiveWeights& weights,
                                    const PerceptualBackbone* backbone,
                                    Variant variant) {
  LossValue v;
  std::vector<ag::Var> terms;
  std::vector<double> coeffs;

  ag::Var mae = mae_loss(pred, target);
  v.mae = ag::scalar(mae);
  terms.push_back(mae);
  coeffs.push_back(weights.mae);

  if (variant_perceptual(variant)) {
    if (backbone == nullptr)
      throw std::invalid_argument(variant_name(variant) +
                                  " needs a perceptual backbone");
    ag::Var perc = perceptual_loss(pred, target, *backbone);
    v.perceptual = ag::scalar(perc);
    v.has_perceptual = true;
    terms.push_back(perc);
    coeffs.push_back(weights.perceptual);
  }

  if (variant_adversarial(variant) && fake_logits != nullptr &&
      weights.adv != 0.0) {
    ag::Var adv = hinge_loss_g(fake_logits);
    v.adv = ag::scalar(adv);
    v.has_adv = true;
    terms.push_back(adv);
    coeffs.push_back(weights.adv);
  }

  ObjectiveResult r;
  r.total = ag::weighted_sum(terms, coeffs);
  v.scalar = ag::scalar(r.total);
  r.value = v;
  return r;
}

}  // namespace vidpred
