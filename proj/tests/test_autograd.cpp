#include "doctest.h"

#include "helpers.hpp"

using namespace vidpred;
using testing::max_grad_err;
using testing::rand_tensor;

namespace {

// weight the output elementwise before reducing so gradients are
// position-dependent (a uniform reduction can hide index bugs)
ag::Var weighted_mean(const ag::Var& y, uint64_t seed) {
  RngStream rng(seed, 0);
  return ag::mean_all(ag::mul(y, ag::constant(rand_tensor(y->value.shape(), rng))));
}

ag::Var grad_leaf(std::vector<int64_t> shape, RngStream& rng, double lo = -1.0,
                  double hi = 1.0) {
  return ag::leaf(rand_tensor(std::move(shape), rng, lo, hi), true);
}

}  // namespace

TEST_SUITE_BEGIN("autograd");

TEST_CASE("backward seeds a scalar root and accumulates through fan-out") {
  RngStream rng(1, 0);
  ag::Var x = grad_leaf({3}, rng);
  ag::Var y = ag::add(x, x);  // dy/dx = 2
  ag::Var s = ag::sum_scaled(y, 1.0);
  ag::backward(s);
  for (int64_t i = 0; i < 3; ++i) CHECK(x->grad[i] == doctest::Approx(2.0));
}

TEST_CASE("elementwise op gradients") {
  RngStream rng(2, 0);
  auto one = [&](const char* tag, auto make) {
    CAPTURE(tag);
    ag::Var x = grad_leaf({2, 3}, rng);
    // keep clear of the relu/abs kinks
    for (int64_t i = 0; i < x->value.size(); ++i)
      if (std::fabs(x->value[i]) < 0.1) x->value[i] += 0.3;
    const double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) { return weighted_mean(make(in[0]), 11); },
        {x});
    CHECK(err < 1e-6);
  };
  one("relu", [](const ag::Var& v) { return ag::relu(v); });
  one("sigmoid", [](const ag::Var& v) { return ag::sigmoid(v); });
  one("abs", [](const ag::Var& v) { return ag::abs(v); });
  one("affine", [](const ag::Var& v) { return ag::affine(v, -1.7, 0.4); });
}

TEST_CASE("binary op gradients") {
  RngStream rng(3, 0);
  ag::Var a = grad_leaf({2, 2, 2}, rng);
  ag::Var b = grad_leaf({2, 2, 2}, rng);
  for (auto [tag, make] : {
           std::pair<const char*, ag::Var (*)(const ag::Var&, const ag::Var&)>{
               "add", [](const ag::Var& x, const ag::Var& y) { return ag::add(x, y); }},
           {"sub", [](const ag::Var& x, const ag::Var& y) { return ag::sub(x, y); }},
           {"mul", [](const ag::Var& x, const ag::Var& y) { return ag::mul(x, y); }},
       }) {
    CAPTURE(tag);
    const double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) {
          return weighted_mean(make(in[0], in[1]), 13);
        },
        {a, b});
    CHECK(err < 1e-6);
  }
}

TEST_CASE("conv3d gradients: strided, padded, and pointwise") {
  RngStream rng(4, 0);
  struct Case {
    std::vector<int64_t> xs, ws;
    nn::Stride3 stride;
    nn::Pad3 pad;
  };
  for (const auto& c : {
           Case{{2, 2, 3, 4, 4}, {3, 2, 2, 3, 3}, {1, 1, 1}, {0, 1, 1}},
           Case{{1, 2, 4, 6, 6}, {2, 2, 3, 3, 3}, {2, 2, 2}, {1, 1, 1}},
           Case{{2, 3, 2, 3, 3}, {4, 3, 1, 1, 1}, {1, 1, 1}, {0, 0, 0}},
       }) {
    CAPTURE(shape_str(c.ws));
    ag::Var x = grad_leaf(c.xs, rng);
    ag::Var w = grad_leaf(c.ws, rng);
    ag::Var b = grad_leaf({c.ws[0]}, rng);
    const double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) {
          return weighted_mean(ag::conv3d(in[0], in[1], in[2], c.stride, c.pad), 17);
        },
        {x, w, b});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("batch norm gradients in training mode") {
  RngStream rng(5, 0);
  ag::Var x = grad_leaf({2, 3, 2, 3, 3}, rng);
  ag::Var gamma = grad_leaf({3}, rng, 0.5, 1.5);
  ag::Var beta = grad_leaf({3}, rng);
  const double err = max_grad_err(
      [&](const std::vector<ag::Var>& in) {
        return weighted_mean(ag::batch_norm(in[0], in[1], in[2], true, nullptr,
                                            nullptr, 0.1, 1e-5),
                             19);
      },
      {x, gamma, beta});
  CHECK(err < 1e-4);
}

TEST_CASE("batch norm gradients in eval mode (fixed affine)") {
  RngStream rng(6, 0);
  ag::Var x = grad_leaf({2, 3, 1, 3, 3}, rng);
  ag::Var gamma = grad_leaf({3}, rng, 0.5, 1.5);
  ag::Var beta = grad_leaf({3}, rng);
  Tensor rm = rand_tensor({3}, rng);
  Tensor rv = rand_tensor({3}, rng, 0.5, 2.0);
  const double err = max_grad_err(
      [&](const std::vector<ag::Var>& in) {
        return weighted_mean(
            ag::batch_norm(in[0], in[1], in[2], false, &rm, &rv, 0.1, 1e-5), 23);
      },
      {x, gamma, beta});
  CHECK(err < 1e-6);
}

TEST_CASE("training-mode batch norm updates running stats, eval mode leaves them") {
  RngStream rng(7, 0);
  ag::Var x = ag::constant(rand_tensor({4, 2, 2, 3, 3}, rng));
  ag::Var gamma = ag::constant(Tensor({2}, 1.0));
  ag::Var beta = ag::constant(Tensor({2}, 0.0));
  Tensor rm({2}, 0.0), rv({2}, 1.0);
  ag::batch_norm(x, gamma, beta, true, &rm, &rv, 0.1, 1e-5);
  CHECK(rm[0] != 0.0);  // folded toward the batch mean
  const Tensor rm_snap = rm, rv_snap = rv;
  ag::batch_norm(x, gamma, beta, false, &rm, &rv, 0.1, 1e-5);
  for (int64_t i = 0; i < 2; ++i) {
    CHECK(rm[i] == rm_snap[i]);
    CHECK(rv[i] == rv_snap[i]);
  }
}

TEST_CASE("structural op gradients") {
  RngStream rng(8, 0);
  SUBCASE("pixel shuffle") {
    ag::Var x = grad_leaf({1, 8, 2, 2, 3}, rng);
    const double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) {
          return weighted_mean(
              ag::pixel_shuffle(in[0], nn::ShuffleMode::kChannelToSpace, 2), 29);
        },
        {x});
    CHECK(err < 1e-6);
  }
  SUBCASE("avgpool") {
    ag::Var x = grad_leaf({2, 2, 2, 5, 4}, rng);  // odd H exercises the drop
    const double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) {
          return weighted_mean(ag::avgpool_hw2(in[0]), 31);
        },
        {x});
    CHECK(err < 1e-6);
  }
  SUBCASE("mean_t and tail_t") {
    ag::Var x = grad_leaf({2, 2, 4, 2, 2}, rng);
    double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) { return weighted_mean(ag::mean_t(in[0]), 37); },
        {x});
    CHECK(err < 1e-6);
    err = max_grad_err(
        [&](const std::vector<ag::Var>& in) { return weighted_mean(ag::tail_t(in[0], 2), 41); },
        {x});
    CHECK(err < 1e-6);
  }
  SUBCASE("concat along channel and time") {
    ag::Var a = grad_leaf({1, 2, 2, 2, 2}, rng);
    ag::Var b = grad_leaf({1, 3, 2, 2, 2}, rng);
    double err = max_grad_err(
        [&](const std::vector<ag::Var>& in) {
          return weighted_mean(ag::concat(in[0], in[1], 1), 43);
        },
        {a, b});
    CHECK(err < 1e-6);
    ag::Var c = grad_leaf({1, 2, 3, 2, 2}, rng);
    err = max_grad_err(
        [&](const std::vector<ag::Var>& in) {
          return weighted_mean(ag::concat(in[0], in[1], 2), 47);
        },
        {a, c});
    CHECK(err < 1e-6);
  }
}

TEST_CASE("site normalize gradient") {
  RngStream rng(9, 0);
  ag::Var x = grad_leaf({1, 4, 1, 3, 3}, rng, 0.2, 1.0);
  const double err = max_grad_err(
      [&](const std::vector<ag::Var>& in) {
        return weighted_mean(ag::site_normalize(in[0], 1e-10), 53);
      },
      {x});
  CHECK(err < 1e-4);
}

TEST_CASE("spectral normalization gradient includes the rank-one term") {
  RngStream rng(10, 0);
  ag::Var w = grad_leaf({3, 2, 1, 2, 2}, rng);
  Tensor u = rand_tensor({3}, rng);
  nn::l2_normalize_vec(u);
  Tensor v(std::vector<int64_t>{8});
  nn::sn_matt_vec(w->value, u, v);
  nn::l2_normalize_vec(v);
  const double err = max_grad_err(
      [&](const std::vector<ag::Var>& in) {
        return weighted_mean(ag::sn_normalize(in[0], u, v), 59);
      },
      {w}, 1e-6);
  CHECK(err < 1e-4);
}

TEST_CASE("dropout: inverted scaling, frozen mask differentiates exactly") {
  RngStream rng(11, 0);
  ag::Var x = grad_leaf({1, 2, 1, 4, 4}, rng, 0.5, 1.5);

  // active=false is the identity
  RngStream noise(3, 4);
  ag::Var same = ag::dropout(x, 0.5, noise, false);
  for (int64_t i = 0; i < x->value.size(); ++i) CHECK(same->value[i] == x->value[i]);

  // the mask is drawn at construction: rebuilding with a reseeded stream
  // reproduces it, so central differences see a fixed linear map
  const double err = max_grad_err(
      [&](const std::vector<ag::Var>& in) {
        RngStream fresh(3, 4);
        return weighted_mean(ag::dropout(in[0], 0.5, fresh, true), 61);
      },
      {x});
  CHECK(err < 1e-6);

  // kept sites are scaled by 1/(1-rate)
  RngStream fresh(3, 4);
  ag::Var y = ag::dropout(x, 0.5, fresh, true);
  int kept = 0;
  for (int64_t i = 0; i < y->value.size(); ++i) {
    if (y->value[i] == 0.0) continue;
    ++kept;
    CHECK(y->value[i] == doctest::Approx(2.0 * x->value[i]));
  }
  CHECK(kept > 0);
  CHECK(kept < y->value.size());
}

TEST_CASE("reductions and weighted_sum") {
  RngStream rng(12, 0);
  ag::Var x = grad_leaf({3, 4}, rng);
  double err = max_grad_err(
      [&](const std::vector<ag::Var>& in) { return ag::mean_all(in[0]); }, {x});
  CHECK(err < 1e-6);
  err = max_grad_err(
      [&](const std::vector<ag::Var>& in) { return ag::sum_scaled(in[0], 0.37); }, {x});
  CHECK(err < 1e-6);

  ag::Var a = grad_leaf({1}, rng), b = grad_leaf({1}, rng), c = grad_leaf({1}, rng);
  err = max_grad_err(
      [&](const std::vector<ag::Var>& in) {
        return ag::weighted_sum({in[0], in[1], in[2]}, {1.0, 1000.0, 400.0}, 0.25);
      },
      {a, b, c});
  CHECK(err < 1e-6);
  CHECK(ag::scalar(ag::weighted_sum({a, b}, {2.0, 3.0}, 1.0)) ==
        doctest::Approx(1.0 + 2.0 * a->value[0] + 3.0 * b->value[0]));
}

TEST_SUITE_END();
