#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vidpred/loss/losses.hpp"

using namespace vidpred;
using testing::max_grad_err;
using testing::rand_tensor;

namespace {

// reference perceptual head: site vectors to unit norm, channel-summed squared
// differences, averaged over sites, summed over blocks.
double ref_perceptual(const std::vector<Tensor>& fx, const std::vector<Tensor>& fy,
                      double eps = 1e-10) {
  double total = 0.0;
  for (size_t l = 0; l < fx.size(); ++l) {
    const auto& s = fx[l].shape();
    const int64_t n = s[0], c = s[1], sites_per_n = s[2] * s[3] * s[4];
    double block = 0.0;
    for (int64_t b = 0; b < n; ++b)
      for (int64_t site = 0; site < sites_per_n; ++site) {
        double nx = 0, ny = 0;
        for (int64_t ch = 0; ch < c; ++ch) {
          const int64_t idx = (b * c + ch) * sites_per_n + site;
          nx += fx[l][idx] * fx[l][idx];
          ny += fy[l][idx] * fy[l][idx];
        }
        nx = std::sqrt(nx) + eps;
        ny = std::sqrt(ny) + eps;
        for (int64_t ch = 0; ch < c; ++ch) {
          const int64_t idx = (b * c + ch) * sites_per_n + site;
          const double d = fx[l][idx] / nx - fy[l][idx] / ny;
          block += d * d;
        }
      }
    total += block / static_cast<double>(n * sites_per_n);
  }
  return total;
}

Tensor frames(std::vector<int64_t> shape, uint64_t seed, double lo = 0.05,
              double hi = 0.95) {
  RngStream rng(seed, 0);
  return rand_tensor(std::move(shape), rng, lo, hi);
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("variant names, flags and parsing") {
  CHECK(variant_name(Variant::kGanVgg) == "GAN-VGG");
  CHECK(variant_name(Variant::kGVgg) == "G-VGG");
  CHECK(variant_name(Variant::kGanMae) == "GAN-MAE");
  CHECK(variant_name(Variant::kGMae) == "G-MAE");
  for (auto v : {Variant::kGanVgg, Variant::kGVgg, Variant::kGanMae, Variant::kGMae})
    CHECK(variant_parse(variant_name(v)) == v);

  CHECK(variant_adversarial(Variant::kGanVgg));
  CHECK(variant_adversarial(Variant::kGanMae));
  CHECK_FALSE(variant_adversarial(Variant::kGVgg));
  CHECK_FALSE(variant_adversarial(Variant::kGMae));
  CHECK(variant_perceptual(Variant::kGanVgg));
  CHECK(variant_perceptual(Variant::kGVgg));
  CHECK_FALSE(variant_perceptual(Variant::kGanMae));
  CHECK_FALSE(variant_perceptual(Variant::kGMae));

  CHECK_THROWS_WITH_AS(variant_parse("vgg"),
                       doctest::Contains("unknown variant"), std::invalid_argument);
}

TEST_CASE("mae matches a direct mean of absolute differences") {
  const Tensor a = frames({1, 3, 2, 2, 2}, 1);
  const Tensor b = frames({1, 3, 2, 2, 2}, 2);
  double ref = 0;
  for (int64_t i = 0; i < a.size(); ++i) ref += std::fabs(a[i] - b[i]);
  ref /= static_cast<double>(a.size());

  const double got = ag::scalar(mae_loss(ag::constant(a), ag::constant(b)));
  CHECK(got == doctest::Approx(ref).epsilon(1e-12));
  // symmetric, zero at equality
  CHECK(ag::scalar(mae_loss(ag::constant(b), ag::constant(a))) ==
        doctest::Approx(ref).epsilon(1e-12));
  CHECK(ag::scalar(mae_loss(ag::constant(a), ag::constant(a))) == 0.0);
  CHECK_THROWS_AS((void)mae_loss(ag::constant(a), ag::constant(frames({1, 3, 1, 2, 2}, 3))),
                  std::invalid_argument);
}

TEST_CASE("mae gradient agrees with finite differences") {
  // keep |pred-target| away from the |.| kink
  Tensor p = frames({1, 3, 1, 2, 2}, 4, 0.6, 0.9);
  Tensor t = frames({1, 3, 1, 2, 2}, 5, 0.1, 0.4);
  auto build = [&](const std::vector<ag::Var>& leaves) {
    return mae_loss(leaves[0], ag::constant(t));
  };
  CHECK(max_grad_err(build, {ag::leaf(p)}) < 1e-6);
}

TEST_CASE("identity-backbone perceptual loss is hand computable") {
  const auto backbone = PerceptualBackbone::identity();
  const Tensor x = frames({1, 3, 1, 2, 2}, 6);
  const Tensor y = frames({1, 3, 1, 2, 2}, 7);
  const double got =
      ag::scalar(perceptual_loss(ag::constant(x), ag::constant(y), backbone));
  const double ref = ref_perceptual({x}, {y});
  CHECK(got == doctest::Approx(ref).epsilon(1e-10));
  // symmetry and self-distance
  CHECK(ag::scalar(perceptual_loss(ag::constant(y), ag::constant(x), backbone)) ==
        doctest::Approx(got).epsilon(1e-12));
  CHECK(ag::scalar(perceptual_loss(ag::constant(x), ag::constant(x), backbone)) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("orthogonal unit channel vectors score 2 per block") {
  // x = e1 at every site, y = e2: normalized difference has squared norm 2
  Tensor x({1, 3, 1, 2, 2});
  Tensor y({1, 3, 1, 2, 2});
  for (int64_t s = 0; s < 4; ++s) {
    x[0 * 4 + s] = 1.0;  // channel 0
    y[1 * 4 + s] = 1.0;  // channel 1
  }
  const auto backbone = PerceptualBackbone::identity();
  const double got =
      ag::scalar(perceptual_loss(ag::constant(x), ag::constant(y), backbone));
  CHECK(got == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("stub-backbone perceptual loss matches the raw-feature reference") {
  const auto backbone = PerceptualBackbone::random_stub(11);
  const Tensor x = frames({2, 3, 1, 8, 8}, 8);
  const Tensor y = frames({2, 3, 1, 8, 8}, 9);
  const double got =
      ag::scalar(perceptual_loss(ag::constant(x), ag::constant(y), backbone));
  const double ref = ref_perceptual(backbone.features_raw(x), backbone.features_raw(y));
  CHECK(got == doctest::Approx(ref).epsilon(1e-10));
  CHECK(got > 0.0);
}

TEST_CASE("perceptual loss is invariant to feature scaling") {
  auto backbone = PerceptualBackbone::random_stub(13);
  const Tensor x = frames({1, 3, 1, 8, 8}, 10);
  const Tensor y = frames({1, 3, 1, 8, 8}, 11);
  const double base =
      ag::scalar(perceptual_loss(ag::constant(x), ag::constant(y), backbone));
  backbone.set_output_scale(7.3);
  const double scaled =
      ag::scalar(perceptual_loss(ag::constant(x), ag::constant(y), backbone));
  CHECK(scaled == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("perceptual gradient agrees with finite differences") {
  const auto backbone = PerceptualBackbone::random_stub(17);
  Tensor p = frames({1, 3, 1, 8, 8}, 12);
  const Tensor t = frames({1, 3, 1, 8, 8}, 13);
  auto build = [&](const std::vector<ag::Var>& leaves) {
    return perceptual_loss(leaves[0], ag::constant(t), backbone);
  };
  CHECK(max_grad_err(build, {ag::leaf(p)}, 1e-5) < 1e-4);
}

TEST_CASE("hinge losses match their closed forms") {
  // real = 1, fake = -1 is the satisfied-margin fixed point
  Tensor ones({2, 3});
  ones.fill(1.0);
  Tensor minus({2, 3});
  minus.fill(-1.0);
  CHECK(ag::scalar(hinge_loss_d(ag::constant(ones), ag::constant(minus))) == 0.0);

  const Tensor real = frames({2, 4}, 14, -2.0, 2.0);
  const Tensor fake = frames({2, 4}, 15, -2.0, 2.0);
  double ref_d = 0;
  for (int64_t i = 0; i < real.size(); ++i) ref_d += std::max(0.0, 1.0 - real[i]);
  for (int64_t i = 0; i < fake.size(); ++i) ref_d += std::max(0.0, 1.0 + fake[i]);
  ref_d /= static_cast<double>(real.size());
  CHECK(ag::scalar(hinge_loss_d(ag::constant(real), ag::constant(fake))) ==
        doctest::Approx(ref_d).epsilon(1e-12));

  double ref_g = 0;
  for (int64_t i = 0; i < fake.size(); ++i) ref_g -= fake[i];
  ref_g /= static_cast<double>(fake.size());
  CHECK(ag::scalar(hinge_loss_g(ag::constant(fake))) ==
        doctest::Approx(ref_g).epsilon(1e-12));
}

TEST_CASE("hinge gradients agree with finite differences") {
  // keep logits away from the +/-1 hinge kinks
  Tensor real = frames({2, 4}, 16, 1.5, 3.0);
  Tensor fake = frames({2, 4}, 17, -3.0, -1.5);
  auto build_d = [](const std::vector<ag::Var>& leaves) {
    return hinge_loss_d(leaves[0], leaves[1]);
  };
  CHECK(max_grad_err(build_d, {ag::leaf(real), ag::leaf(fake)}) < 1e-6);

  Tensor fake2 = frames({2, 4}, 18, -2.0, 2.0);
  auto build_g = [](const std::vector<ag::Var>& leaves) {
    return hinge_loss_g(leaves[0]);
  };
  CHECK(max_grad_err(build_g, {ag::leaf(fake2)}) < 1e-6);
}

TEST_CASE("hinge losses refuse non-finite logits") {
  Tensor bad({2, 2});
  bad[0] = std::numeric_limits<double>::infinity();
  Tensor ok({2, 2});
  CHECK_THROWS_AS((void)hinge_loss_d(ag::constant(bad), ag::constant(ok)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)hinge_loss_d(ag::constant(ok), ag::constant(bad)),
                  std::invalid_argument);
  bad[0] = std::nan("");
  CHECK_THROWS_AS((void)hinge_loss_g(ag::constant(bad)), std::invalid_argument);
}

TEST_CASE("generator objective composes its terms with the published weights") {
  const auto backbone = PerceptualBackbone::random_stub(19);
  const Tensor pred = frames({1, 3, 1, 8, 8}, 20);
  const Tensor target = frames({1, 3, 1, 8, 8}, 21);
  const Tensor logits = frames({1, 1, 1, 2, 2}, 22, -2.0, 2.0);
  const ObjectiveWeights w;  // 1 / 1000 / 400

  auto pv = ag::constant(pred);
  auto tv = ag::constant(target);
  auto lv = ag::constant(logits);

  const auto r = generator_objective(pv, tv, lv, w, &backbone, Variant::kGanVgg);
  CHECK(r.value.has_adv);
  CHECK(r.value.has_perceptual);
  CHECK(r.value.mae == doctest::Approx(ag::scalar(mae_loss(pv, tv))).epsilon(1e-12));
  CHECK(r.value.perceptual ==
        doctest::Approx(ag::scalar(perceptual_loss(pv, tv, backbone))).epsilon(1e-12));
  CHECK(r.value.adv == doctest::Approx(ag::scalar(hinge_loss_g(lv))).epsilon(1e-12));
  const double expect =
      w.adv * r.value.adv + w.mae * r.value.mae + w.perceptual * r.value.perceptual;
  CHECK(r.value.scalar == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ag::scalar(r.total) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("generator objective drops absent terms per variant") {
  const auto backbone = PerceptualBackbone::random_stub(23);
  auto pv = ag::constant(frames({1, 3, 1, 8, 8}, 24));
  auto tv = ag::constant(frames({1, 3, 1, 8, 8}, 25));
  const ObjectiveWeights w;

  const auto mae_only = generator_objective(pv, tv, nullptr, w, nullptr, Variant::kGMae);
  CHECK_FALSE(mae_only.value.has_adv);
  CHECK_FALSE(mae_only.value.has_perceptual);
  CHECK(mae_only.value.scalar ==
        doctest::Approx(w.mae * mae_only.value.mae).epsilon(1e-12));

  const auto vgg = generator_objective(pv, tv, nullptr, w, &backbone, Variant::kGVgg);
  CHECK_FALSE(vgg.value.has_adv);
  CHECK(vgg.value.has_perceptual);
  CHECK(vgg.value.scalar ==
        doctest::Approx(w.mae * vgg.value.mae + w.perceptual * vgg.value.perceptual)
            .epsilon(1e-12));

  // adversarial variant without logits this step: adv term simply absent
  const auto no_logits =
      generator_objective(pv, tv, nullptr, w, nullptr, Variant::kGanMae);
  CHECK_FALSE(no_logits.value.has_adv);

  CHECK_THROWS_WITH_AS(
      (void)generator_objective(pv, tv, nullptr, w, nullptr, Variant::kGVgg),
      doctest::Contains("backbone"), std::invalid_argument);
}

TEST_CASE("objective gradient flows through all terms") {
  const auto backbone = PerceptualBackbone::random_stub(29);
  const Tensor target = frames({1, 3, 1, 8, 8}, 26);
  Tensor pred = frames({1, 3, 1, 8, 8}, 27);
  const Tensor logits = frames({1, 1, 1, 2, 2}, 28, -2.0, 2.0);
  ObjectiveWeights w;
  w.mae = 3.0;
  w.perceptual = 2.0;

  auto build = [&](const std::vector<ag::Var>& leaves) {
    return generator_objective(leaves[0], ag::constant(target), ag::constant(logits),
                               w, &backbone, Variant::kGanVgg)
        .total;
  };
  CHECK(max_grad_err(build, {ag::leaf(pred)}, 1e-5) < 1e-4);
}

TEST_SUITE_END();
