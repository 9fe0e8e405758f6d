#include "doctest.h"

#include <set>

#include "helpers.hpp"
#include "vidpred/model/generator.hpp"

using namespace vidpred;
using testing::rand_tensor;

namespace {

Tensor random_clip(std::vector<int64_t> shape, uint64_t seed) {
  RngStream rng(seed, 0);
  return rand_tensor(std::move(shape), rng, 0.05, 0.95);
}

}  // namespace

TEST_SUITE_BEGIN("generator");

TEST_CASE("config derived quantities") {
  const auto cfg = GeneratorConfig::desk_scale();
  CHECK(cfg.levels == 4);
  CHECK(cfg.temporal_extent(0) == 8);
  CHECK(cfg.temporal_extent(1) == 8);  // stride 1 at level 1
  CHECK(cfg.temporal_extent(2) == 4);
  CHECK(cfg.temporal_extent(3) == 2);
  CHECK(cfg.temporal_extent(4) == 1);
  // lateral chain at level 1 must collapse extent 8 -> 1 with three convs
  const auto k1 = cfg.lateral_kernels(1);
  CHECK(k1 == std::array<int64_t, 3>{4, 3, 3});
  CHECK((8 - k1[0] + 1) - k1[1] + 1 - k1[2] + 1 == 1);
  const auto k4 = cfg.lateral_kernels(4);
  CHECK(k4 == std::array<int64_t, 3>{1, 1, 1});
  // top level has no sibling above: td output feeds level channels/2
  CHECK(cfg.td_channels(4) == 32);
  CHECK(cfg.td_channels(1) == 4);
  // noise defaults to the two coarsest levels
  CHECK_FALSE(cfg.noise_at(1));
  CHECK_FALSE(cfg.noise_at(2));
  CHECK(cfg.noise_at(3));
  CHECK(cfg.noise_at(4));
  cfg.validate();
}

TEST_CASE("config validation rejects bad setups") {
  auto cfg = GeneratorConfig::desk_scale();
  cfg.channels = {8, 16};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // levels mismatch
  cfg = GeneratorConfig::desk_scale();
  cfg.temporal_strides = {1, 2, 2, 3};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // extent must hit 1
  cfg = GeneratorConfig::desk_scale();
  cfg.noise.rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("forward obeys the per-level shape laws and lands in (0,1)") {
  Generator gen(GeneratorConfig::desk_scale(), 7);
  const int64_t H = 64, W = 80;
  ag::Var clip = ag::constant(random_clip({2, 3, 8, H, W}, 1));
  ForwardTrace trace;
  ag::Var out = gen.forward(clip, nullptr, /*training=*/false, &trace);

  REQUIRE(out->value.shape() == std::vector<int64_t>{2, 3, 1, H, W});
  CHECK(out->value.min() > 0.0);
  CHECK(out->value.max() < 1.0);

  const auto& cfg = gen.config();
  REQUIRE(trace.u_shapes.size() == 5);
  for (int l = 1; l <= 4; ++l) {
    const auto& u = trace.u_shapes[static_cast<size_t>(l)];
    CHECK(u == std::vector<int64_t>{2, cfg.channels[static_cast<size_t>(l - 1)],
                                    cfg.temporal_extent(l), H >> l, W >> l});
    const auto& s = trace.s_shapes[static_cast<size_t>(l)];
    CHECK(s == std::vector<int64_t>{2, cfg.channels[static_cast<size_t>(l - 1)], 1,
                                    H >> l, W >> l});
    // td output of level l lives one scale finer
    const auto& d = trace.d_shapes[static_cast<size_t>(l)];
    CHECK(d == std::vector<int64_t>{2, cfg.td_channels(l), 1, H >> (l - 1), W >> (l - 1)});
  }
}

TEST_CASE("clip validation names the violated constraint") {
  Generator gen(GeneratorConfig::desk_scale(), 7);
  CHECK_THROWS_AS(gen.predict(Tensor({3, 7, 64, 80})), std::invalid_argument);  // T
  CHECK_THROWS_AS(gen.predict(Tensor({3, 8, 60, 80})), std::invalid_argument);  // H % 16
  CHECK_THROWS_AS(gen.predict(Tensor({1, 8, 64, 80})), std::invalid_argument);  // C
}

TEST_CASE("zeroed head emits exactly 0.5 everywhere") {
  Generator gen(GeneratorConfig::tiny(), 3);
  gen.head_weight()->value.fill(0.0);
  gen.head_bias()->value.fill(0.0);
  const Tensor pred = gen.predict(random_clip({3, 8, 16, 16}, 2));
  REQUIRE(pred.shape() == std::vector<int64_t>{3, 16, 16});
  for (int64_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == 0.5);
}

TEST_CASE("same seed, same prediction; different seed differs") {
  const Tensor clip = random_clip({3, 8, 16, 16}, 5);
  Generator a(GeneratorConfig::tiny(), 11), b(GeneratorConfig::tiny(), 11);
  Generator c(GeneratorConfig::tiny(), 12);
  const Tensor pa = a.predict(clip), pb = b.predict(clip), pc = c.predict(clip);
  for (int64_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  double diff = 0;
  for (int64_t i = 0; i < pa.size(); ++i) diff += std::fabs(pa[i] - pc[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("stochastic units: reseeded draws repeat, live draws vary") {
  Generator gen(GeneratorConfig::tiny(), 13);
  const Tensor clip = random_clip({3, 8, 16, 16}, 6);

  RngStream n1(9, 4), n2(9, 4);
  const Tensor s1 = gen.predict(clip, &n1);
  const Tensor s2 = gen.predict(clip, &n2);
  for (int64_t i = 0; i < s1.size(); ++i) CHECK(s1[i] == s2[i]);

  const Tensor s3 = gen.predict(clip, &n1);  // stream advanced: a new sample
  double diff = 0;
  for (int64_t i = 0; i < s1.size(); ++i) diff += std::fabs(s1[i] - s3[i]);
  CHECK(diff > 0.0);

  // noise can be disabled globally
  gen.set_noise_enabled(false);
  RngStream n3(9, 4);
  const Tensor off1 = gen.predict(clip, &n3);
  const Tensor off2 = gen.predict(clip, nullptr);
  for (int64_t i = 0; i < off1.size(); ++i) CHECK(off1[i] == off2[i]);
}

TEST_CASE("gradients flow to every parameter and match finite differences") {
  GeneratorConfig cfg = GeneratorConfig::tiny();
  Generator gen(cfg, 17);
  const Tensor clip_t = random_clip({1, 3, 8, 16, 16}, 7);
  const Tensor target = random_clip({1, 3, 1, 16, 16}, 8);

  auto loss_of = [&]() {
    ag::Var pred = gen.forward(ag::constant(clip_t), nullptr, /*training=*/true);
    ag::Var diff = ag::abs(ag::sub(pred, ag::constant(target)));
    return ag::mean_all(diff);
  };

  ag::Var loss = loss_of();
  ag::backward(loss);

  auto params = gen.params();
  // every parameter must participate (dead branches would silently rot)
  for (auto& p : params) {
    CAPTURE(p.name);
    REQUIRE(p.var->has_grad);
    double norm = 0;
    for (int64_t i = 0; i < p.var->grad.size(); ++i) norm += std::fabs(p.var->grad[i]);
    CHECK(norm > 0.0);
  }

  // spot-check autograd against central differences on a spread of
  // coordinates; batch statistics make this the full composite network
  RngStream pick(23, 0);
  double worst = 0;
  for (int probe = 0; probe < 24; ++probe) {
    auto& p = params[static_cast<size_t>(pick.uniform_int(static_cast<int64_t>(params.size())))];
    const int64_t i = pick.uniform_int(p.var->value.size());
    const double x0 = p.var->value[i];
    const double h = 3e-5 * std::max(1.0, std::fabs(x0));
    p.var->value[i] = x0 + h;
    const double fp = ag::scalar(loss_of());
    p.var->value[i] = x0 - h;
    const double fm = ag::scalar(loss_of());
    p.var->value[i] = x0;
    worst = std::max(worst, testing::rel_err(p.var->grad[i], (fp - fm) / (2.0 * h)));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("rollout: first step equals predict, prefixes agree when noise is off") {
  Generator gen(GeneratorConfig::tiny(), 19);
  const Tensor clip = random_clip({3, 8, 16, 16}, 9);

  const Tensor one = gen.predict(clip);
  const Tensor roll3 = gen.rollout(clip, 3);
  REQUIRE(roll3.shape() == std::vector<int64_t>{3, 3, 16, 16});
  const int64_t plane = 16 * 16;
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t i = 0; i < plane; ++i)
      CHECK(roll3[(c * 3) * plane + i] == one[c * plane + i]);

  const Tensor roll5 = gen.rollout(clip, 5);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t k = 0; k < 3; ++k)
      for (int64_t i = 0; i < plane; ++i)
        CHECK(roll5[(c * 5 + k) * plane + i] == roll3[(c * 3 + k) * plane + i]);
}

TEST_CASE("parameter names are unique and buffers cover BN state") {
  Generator gen(GeneratorConfig::desk_scale(), 23);
  auto params = gen.params();
  auto buffers = gen.buffers();
  std::set<std::string> names;
  for (const auto& p : params) CHECK(names.insert(p.name).second);
  for (const auto& b : buffers) CHECK(names.insert(b.name).second);
  // 4 BU + 12 LAT + 8 TD blocks with BN each: 24 running-mean buffers
  int running = 0;
  for (const auto& b : buffers)
    if (b.name.find("running_mean") != std::string::npos) ++running;
  CHECK(running == 24);
}

TEST_SUITE_END();
