#include "vidpred/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vidpred/nn/kernels.hpp"

namespace vidpred::eval {
namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L=1
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_window() {
  static const std::vector<double> g = [] {
    std::vector<double> v(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      v[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += v[static_cast<size_t>(i)];
    }
    for (auto& x : v) x /= sum;
    return v;
  }();
  return g;
}

// Valid-mode separable Gaussian filter of one (H,W) plane.
std::vector<double> blur_valid(const double* img, int64_t h, int64_t w,
                               int64_t& oh, int64_t& ow) {
  const auto& g = gaussian_window();
  oh = h - kWin + 1;
  ow = w - kWin + 1;
  std::vector<double> rows(static_cast<size_t>(h * ow));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i)
        acc += g[static_cast<size_t>(i)] * img[y * w + x + i];
      rows[static_cast<size_t>(y * ow + x)] = acc;
    }
  std::vector<double> out(static_cast<size_t>(oh * ow));
  for (int64_t y = 0; y < oh; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i)
        acc += g[static_cast<size_t>(i)] * rows[static_cast<size_t>((y + i) * ow + x)];
      out[static_cast<size_t>(y * ow + x)] = acc;
    }
  return out;
}

double ssim_plane(const double* x, const double* y, int64_t h, int64_t w) {
  int64_t oh = 0, ow = 0;
  std::vector<double> xy(static_cast<size_t>(h * w)), xx(static_cast<size_t>(h * w)),
      yy(static_cast<size_t>(h * w));
  for (int64_t i = 0; i < h * w; ++i) {
    xy[static_cast<size_t>(i)] = x[i] * y[i];
    xx[static_cast<size_t>(i)] = x[i] * x[i];
    yy[static_cast<size_t>(i)] = y[i] * y[i];
  }
  const auto mx = blur_valid(x, h, w, oh, ow);
  const auto my = blur_valid(y, h, w, oh, ow);
  const auto mxy = blur_valid(xy.data(), h, w, oh, ow);
  const auto mxx = blur_valid(xx.data(), h, w, oh, ow);
  const auto myy = blur_valid(yy.data(), h, w, oh, ow);
  double acc = 0.0;
  for (size_t i = 0; i < mx.size(); ++i) {
    const double mu_x = mx[i], mu_y = my[i];
    const double var_x = mxx[i] - mu_x * mu_x;
    const double var_y = myy[i] - mu_y * mu_y;
    const double cov = mxy[i] - mu_x * mu_y;
    acc += ((2.0 * mu_x * mu_y + kC1) * (2.0 * cov + kC2)) /
           ((mu_x * mu_x + mu_y * mu_y + kC1) * (var_x + var_y + kC2));
  }
  return acc / static_cast<double>(mx.size());
}

}  // namespace

double ssim(const Tensor& x, const Tensor& y) {
  check_same_shape(x, y, "ssim");
  if (x.ndim() != 3)
    throw std::invalid_argument("ssim: expected (C,H,W) frames");
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h < kWin || w < kWin)
    throw std::invalid_argument("ssim: frame smaller than the 11x11 window");
  double acc = 0.0;
  for (int64_t ch = 0; ch < c; ++ch)
    acc += ssim_plane(x.data() + ch * h * w, y.data() + ch * h * w, h, w);
  return acc / static_cast<double>(c);
}

double perceptual_distance(const Tensor& x, const Tensor& y,
                           const PerceptualBackbone& backbone) {
  check_same_shape(x, y, "perceptual_distance");
  if (x.ndim() != 3 || x.dim(0) != 3)
    throw std::invalid_argument("perceptual_distance: expected (3,H,W)");
  const Tensor xb = x.reshaped({1, 3, 1, x.dim(1), x.dim(2)});
  const Tensor yb = y.reshaped({1, 3, 1, y.dim(1), y.dim(2)});
  const auto fx = backbone.features_raw(xb);
  const auto fy = backbone.features_raw(yb);
  double total = 0.0;
  for (size_t l = 0; l < fx.size(); ++l) {
    const Tensor nx = nn::site_normalize_forward(fx[l], 1e-10);
    const Tensor ny = nn::site_normalize_forward(fy[l], 1e-10);
    const Tensor& lin = backbone.lin_weights(l);
    const int64_t C = nx.dim(1), H = nx.dim(3), W = nx.dim(4);
    double block = 0.0;
    for (int64_t c = 0; c < C; ++c) {
      const double wc = lin[c];
      if (wc == 0.0) continue;
      const double* a = nx.data() + c * H * W;
      const double* b = ny.data() + c * H * W;
      double s = 0.0;
      for (int64_t i = 0; i < H * W; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
      }
      block += wc * s;
    }
    total += block / static_cast<double>(H * W);
  }
  return total;
}

data::FrameSequence copy_last_frame(const data::FrameSequence& clip,
                                    int64_t n_steps) {
  if (n_steps < 1)
    throw std::invalid_argument("copy_last_frame: n_steps must be >= 1");
  const Tensor last = clip.frame(clip.length() - 1);
  const int64_t h = last.dim(1), w = last.dim(2);
  data::FrameSequence out;
  out.frames = Tensor({3, n_steps, h, w});
  out.source_id = clip.source_id;
  out.start_index = clip.start_index + clip.length();
  const int64_t plane = h * w;
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t k = 0; k < n_steps; ++k)
      std::copy(last.data() + c * plane, last.data() + (c + 1) * plane,
                out.frames.data() + (c * n_steps + k) * plane);
  return out;
}

}  // namespace vidpred::eval
