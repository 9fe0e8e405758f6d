#include "doctest.h"

#ifdef VIDPRED_HAVE_EIGEN
#include <Eigen/Dense>
#include <Eigen/SVD>
#endif

#include "helpers.hpp"
#include "vidpred/model/discriminator.hpp"

using namespace vidpred;
using testing::rand_tensor;

namespace {

Tensor random_frames(std::vector<int64_t> shape, uint64_t seed) {
  RngStream rng(seed, 0);
  return rand_tensor(std::move(shape), rng, 0.05, 0.95);
}

ag::Var find_param(std::vector<nn::ParamRef>& params, const std::string& name) {
  for (auto& p : params)
    if (p.name == name) return p.var;
  throw std::runtime_error("missing param " + name);
}

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

}  // namespace

TEST_SUITE_BEGIN("discriminator");

TEST_CASE("patch grid halves per stage with floor semantics") {
  const auto desk = DiscriminatorConfig::desk_scale();
  CHECK(desk.patch_grid(128, 160) == std::array<int64_t, 2>{4, 5});
  CHECK(desk.patch_grid(64, 80) == std::array<int64_t, 2>{2, 2});  // 80->40->20->10->5->2
  const auto tiny = DiscriminatorConfig::tiny();
  CHECK(tiny.patch_grid(16, 16) == std::array<int64_t, 2>{4, 4});
  CHECK(tiny.patch_grid(32, 48) == std::array<int64_t, 2>{8, 12});
  CHECK_THROWS_AS((void)desk.patch_grid(16, 16), std::invalid_argument);
}

TEST_CASE("config validation") {
  auto cfg = DiscriminatorConfig::desk_scale();
  cfg.stage_blocks = {1, 2};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // length mismatch
  cfg = DiscriminatorConfig::desk_scale();
  cfg.stage_channels = {8, 16, 16, 64, 128};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // not increasing
  cfg = DiscriminatorConfig::tiny();
  cfg.stage_blocks = {1, 0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // empty stage
}

TEST_CASE("forward emits one logit per patch, conditioned on the clip") {
  Discriminator disc(DiscriminatorConfig::tiny(), 31);
  const Tensor clip = random_frames({3, 8, 16, 16}, 1);
  const Tensor cand = random_frames({3, 16, 16}, 2);
  const auto logits = disc.discriminate(clip, cand);
  REQUIRE(logits.values.shape() == std::vector<int64_t>{4, 4});

  // the score must react to the candidate...
  Tensor cand2 = cand;
  cand2[0] += 0.2;
  const auto logits2 = disc.discriminate(clip, cand2);
  double diff = 0;
  for (int64_t i = 0; i < 16; ++i) diff += std::fabs(logits.values[i] - logits2.values[i]);
  CHECK(diff > 0.0);

  // ...and to the conditioning clip
  Tensor clip2 = clip;
  clip2[clip2.size() / 2] += 0.2;
  const auto logits3 = disc.discriminate(clip2, cand);
  diff = 0;
  for (int64_t i = 0; i < 16; ++i) diff += std::fabs(logits.values[i] - logits3.values[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("batched forward validates shapes") {
  Discriminator disc(DiscriminatorConfig::tiny(), 31);
  ag::Var clip = ag::constant(random_frames({2, 3, 8, 16, 16}, 3));
  ag::Var cand = ag::constant(random_frames({2, 3, 1, 16, 16}, 4));
  ag::Var out = disc.forward(clip, cand, /*update_u=*/false);
  CHECK(out->value.shape() == std::vector<int64_t>{2, 1, 1, 4, 4});

  ag::Var bad_t = ag::constant(random_frames({2, 3, 7, 16, 16}, 5));
  CHECK_THROWS_AS((void)disc.forward(bad_t, cand, false), std::invalid_argument);
  ag::Var bad_c = ag::constant(random_frames({2, 3, 1, 16, 32}, 6));
  CHECK_THROWS_AS((void)disc.forward(clip, bad_c, false), std::invalid_argument);
}

TEST_CASE("zeroed score conv collapses all logits to zero") {
  auto cfg = DiscriminatorConfig::tiny();
  cfg.spectral_norm = false;  // weight surgery is only exact without normalization
  Discriminator disc(cfg, 37);
  auto params = disc.params();
  find_param(params, "d/score/w")->value.fill(0.0);
  find_param(params, "d/score/b")->value.fill(0.0);
  const auto logits = disc.discriminate(random_frames({3, 8, 16, 16}, 7),
                                        random_frames({3, 16, 16}, 8));
  for (int64_t i = 0; i < logits.values.size(); ++i) CHECK(logits.values[i] == 0.0);
}

TEST_CASE("residual blocks are transparent once their closing conv is zeroed") {
  // pre-activation residual: y = x + conv2(relu(conv1(relu(x)))).
  // zeroing conv2 must make the block the identity, so conv1 cannot matter.
  DiscriminatorConfig cfg;
  cfg.stage_blocks = {1, 2};  // second block of stage 2 is 6->6, no projection
  cfg.stage_channels = {4, 6};
  cfg.spectral_norm = false;
  Discriminator disc(cfg, 41);
  auto params = disc.params();
  find_param(params, "d/s2_b2/conv2/w")->value.fill(0.0);
  find_param(params, "d/s2_b2/conv2/b")->value.fill(0.0);

  const Tensor clip = random_frames({3, 8, 16, 16}, 9);
  const Tensor cand = random_frames({3, 16, 16}, 10);
  const auto base = disc.discriminate(clip, cand);

  auto conv1 = find_param(params, "d/s2_b2/conv1/w");
  RngStream rng(43, 0);
  conv1->value = rand_tensor(conv1->value.shape(), rng);
  const auto perturbed = disc.discriminate(clip, cand);
  for (int64_t i = 0; i < base.values.size(); ++i)
    CHECK(perturbed.values[i] == base.values[i]);
}

#ifdef VIDPRED_HAVE_EIGEN
TEST_CASE("power iteration tracks the exact leading singular value") {
  Discriminator disc(DiscriminatorConfig::tiny(), 47);
  disc.power_iterate(200);
  const auto estimates = disc.sigma_estimates();
  REQUIRE_FALSE(estimates.empty());

  auto params = disc.params();
  size_t checked = 0;
  for (auto& p : params) {
    if (!ends_with(p.name, "/w")) continue;
    const Tensor& w = p.var->value;
    const int64_t rows = w.dim(0), cols = w.size() / w.dim(0);
    Eigen::MatrixXd m(rows, cols);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) m(r, c) = w[r * cols + c];
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    REQUIRE(checked < estimates.size());
    const double est = estimates[checked++];
    // the estimate converges to sigma_max from below
    CAPTURE(p.name);
    CHECK(est <= exact * (1.0 + 1e-9));
    CHECK(est >= exact * (1.0 - 1e-3));
  }
  CHECK(checked == estimates.size());
}

TEST_CASE("normalized weights are contractive in spectral norm") {
  Discriminator disc(DiscriminatorConfig::tiny(), 53);
  disc.power_iterate(200);
  const auto estimates = disc.sigma_estimates();
  auto params = disc.params();
  size_t k = 0;
  for (auto& p : params) {
    if (!ends_with(p.name, "/w")) continue;
    const Tensor& w = p.var->value;
    REQUIRE(k < estimates.size());
    const double sigma = estimates[k++];
    REQUIRE(sigma > 0.0);
    const int64_t rows = w.dim(0), cols = w.size() / w.dim(0);
    Eigen::MatrixXd m(rows, cols);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) m(r, c) = w[r * cols + c] / sigma;
    const double top = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    CHECK(top <= 1.0 + 1e-3);  // forward scales by exactly these estimates
  }
}
#endif

TEST_CASE("power iteration state is exposed and frozen during eval forwards") {
  Discriminator disc(DiscriminatorConfig::tiny(), 59);
  auto bufs = disc.buffers();
  int u_count = 0;
  for (const auto& b : bufs)
    if (ends_with(b.name, "/sn_u")) ++u_count;
  // conv1+conv2+proj per stage block, plus the score conv
  CHECK(u_count == 7);

  const auto before = disc.sigma_estimates();
  const auto logits_a = disc.discriminate(random_frames({3, 8, 16, 16}, 11),
                                          random_frames({3, 16, 16}, 12));
  const auto logits_b = disc.discriminate(random_frames({3, 8, 16, 16}, 11),
                                          random_frames({3, 16, 16}, 12));
  const auto after = disc.sigma_estimates();
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
  for (int64_t i = 0; i < logits_a.values.size(); ++i)
    CHECK(logits_a.values[i] == logits_b.values[i]);
}

TEST_CASE("training forwards advance the power iteration") {
  Discriminator disc(DiscriminatorConfig::tiny(), 61);
  const auto before = disc.sigma_estimates();
  ag::Var clip = ag::constant(random_frames({1, 3, 8, 16, 16}, 13));
  ag::Var cand = ag::constant(random_frames({1, 3, 1, 16, 16}, 14));
  (void)disc.forward(clip, cand, /*update_u=*/true);
  const auto after = disc.sigma_estimates();
  double moved = 0;
  for (size_t i = 0; i < before.size(); ++i) moved += std::fabs(after[i] - before[i]);
  CHECK(moved > 0.0);
}

TEST_CASE("gradients reach every discriminator parameter") {
  Discriminator disc(DiscriminatorConfig::tiny(), 61);
  ag::Var clip = ag::constant(random_frames({1, 3, 8, 16, 16}, 13));
  ag::Var cand = ag::constant(random_frames({1, 3, 1, 16, 16}, 14));
  ag::Var out = disc.forward(clip, cand, /*update_u=*/true);
  ag::backward(ag::mean_all(out));
  for (auto& p : disc.params()) {
    CAPTURE(p.name);
    REQUIRE(p.var->has_grad);
    double norm = 0;
    for (int64_t i = 0; i < p.var->grad.size(); ++i) norm += std::fabs(p.var->grad[i]);
    CHECK(norm > 0.0);
  }
}

TEST_SUITE_END();
