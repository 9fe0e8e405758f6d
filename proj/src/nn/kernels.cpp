#include "vidpred/nn/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace vidpred::nn {

namespace {

void check_5d(const Tensor& t, const char* what) {
  if (t.ndim() != 5)
    throw std::invalid_argument(std::string(what) + ": expected 5-D tensor, got " +
                                shape_str(t));
}

int64_t ceil_div(int64_t a, int64_t b) { return a > 0 ? (a + b - 1) / b : a / b; }

int64_t conv_extent(int64_t in, int64_t k, int64_t s, int64_t p) {
  int64_t out = (in + 2 * p - k) / s + 1;
  if (out <= 0)
    throw std::invalid_argument("conv3d: non-positive output extent");
  return out;
}

}  // namespace

std::vector<int64_t> conv3d_out_shape(const std::vector<int64_t>& xs,
                                      const std::vector<int64_t>& ws,
                                      const Stride3& stride, const Pad3& pad) {
  if (xs.size() != 5 || ws.size() != 5)
    throw std::invalid_argument("conv3d: inputs must be 5-D");
  if (xs[1] != ws[1])
    throw std::invalid_argument("conv3d: channel mismatch x" + shape_str(xs) +
                                " w" + shape_str(ws));
  return {xs[0], ws[0], conv_extent(xs[2], ws[2], stride[0], pad[0]),
          conv_extent(xs[3], ws[3], stride[1], pad[1]),
          conv_extent(xs[4], ws[4], stride[2], pad[2])};
}

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                      const Stride3& stride, const Pad3& pad) {
  check_5d(x, "conv3d");
  check_5d(w, "conv3d weight");
  const auto ys = conv3d_out_shape(x.shape(), w.shape(), stride, pad);
  const int64_t N = x.dim(0), Ci = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  const int64_t Co = w.dim(0), kT = w.dim(2), kH = w.dim(3), kW = w.dim(4);
  const int64_t To = ys[2], Ho = ys[3], Wo = ys[4];
  const int64_t st = stride[0], sh = stride[1], sw = stride[2];
  const int64_t pt = pad[0], ph = pad[1], pw = pad[2];

  Tensor y(ys);
  double* yd = y.data();
  const double* xd = x.data();
  const double* wd = w.data();

  if (!bias.empty()) {
    if (bias.size() != Co)
      throw std::invalid_argument("conv3d: bias size mismatch");
    for (int64_t n = 0; n < N; ++n)
      for (int64_t co = 0; co < Co; ++co) {
        double b = bias[co];
        double* row = yd + ((n * Co + co) * To) * Ho * Wo;
        for (int64_t i = 0; i < To * Ho * Wo; ++i) row[i] = b;
      }
  }

  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ci = 0; ci < Ci; ++ci)
        for (int64_t kt = 0; kt < kT; ++kt) {
          const int64_t to_lo = std::max<int64_t>(0, ceil_div(pt - kt, st));
          const int64_t to_hi = std::min(To - 1, (T - 1 + pt - kt) / st);
          for (int64_t kh = 0; kh < kH; ++kh) {
            const int64_t ho_lo = std::max<int64_t>(0, ceil_div(ph - kh, sh));
            const int64_t ho_hi = std::min(Ho - 1, (H - 1 + ph - kh) / sh);
            for (int64_t kw = 0; kw < kW; ++kw) {
              const double wv =
                  wd[(((co * Ci + ci) * kT + kt) * kH + kh) * kW + kw];
              if (wv == 0.0) continue;
              const int64_t wo_lo = std::max<int64_t>(0, ceil_div(pw - kw, sw));
              const int64_t wo_hi = std::min(Wo - 1, (W - 1 + pw - kw) / sw);
              for (int64_t to = to_lo; to <= to_hi; ++to) {
                const int64_t ti = to * st + kt - pt;
                for (int64_t ho = ho_lo; ho <= ho_hi; ++ho) {
                  const int64_t hi = ho * sh + kh - ph;
                  const double* xrow =
                      xd + (((n * Ci + ci) * T + ti) * H + hi) * W + (kw - pw);
                  double* yrow = yd + (((n * Co + co) * To + to) * Ho + ho) * Wo;
                  if (sw == 1) {
                    for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                      yrow[wo] += wv * xrow[wo];
                  } else {
                    for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                      yrow[wo] += wv * xrow[wo * sw];
                  }
                }
              }
            }
          }
        }
  return y;
}

Tensor conv3d_backward_input(const Tensor& gy, const Tensor& w,
                             const std::vector<int64_t>& x_shape,
                             const Stride3& stride, const Pad3& pad) {
  const int64_t N = x_shape[0], Ci = x_shape[1], T = x_shape[2], H = x_shape[3],
                W = x_shape[4];
  const int64_t Co = w.dim(0), kT = w.dim(2), kH = w.dim(3), kW = w.dim(4);
  const int64_t To = gy.dim(2), Ho = gy.dim(3), Wo = gy.dim(4);
  const int64_t st = stride[0], sh = stride[1], sw = stride[2];
  const int64_t pt = pad[0], ph = pad[1], pw = pad[2];

  Tensor gx(x_shape);
  double* gxd = gx.data();
  const double* gyd = gy.data();
  const double* wd = w.data();

  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ci = 0; ci < Ci; ++ci)
        for (int64_t kt = 0; kt < kT; ++kt) {
          const int64_t to_lo = std::max<int64_t>(0, ceil_div(pt - kt, st));
          const int64_t to_hi = std::min(To - 1, (T - 1 + pt - kt) / st);
          for (int64_t kh = 0; kh < kH; ++kh) {
            const int64_t ho_lo = std::max<int64_t>(0, ceil_div(ph - kh, sh));
            const int64_t ho_hi = std::min(Ho - 1, (H - 1 + ph - kh) / sh);
            for (int64_t kw = 0; kw < kW; ++kw) {
              const double wv =
                  wd[(((co * Ci + ci) * kT + kt) * kH + kh) * kW + kw];
              if (wv == 0.0) continue;
              const int64_t wo_lo = std::max<int64_t>(0, ceil_div(pw - kw, sw));
              const int64_t wo_hi = std::min(Wo - 1, (W - 1 + pw - kw) / sw);
              for (int64_t to = to_lo; to <= to_hi; ++to) {
                const int64_t ti = to * st + kt - pt;
                for (int64_t ho = ho_lo; ho <= ho_hi; ++ho) {
                  const int64_t hi = ho * sh + kh - ph;
                  double* gxrow =
                      gxd + (((n * Ci + ci) * T + ti) * H + hi) * W + (kw - pw);
                  const double* gyrow =
                      gyd + (((n * Co + co) * To + to) * Ho + ho) * Wo;
                  if (sw == 1) {
                    for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                      gxrow[wo] += wv * gyrow[wo];
                  } else {
                    for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                      gxrow[wo * sw] += wv * gyrow[wo];
                  }
                }
              }
            }
          }
        }
  return gx;
}

Tensor conv3d_backward_weight(const Tensor& gy, const Tensor& x,
                              const std::vector<int64_t>& w_shape,
                              const Stride3& stride, const Pad3& pad) {
  const int64_t N = x.dim(0), Ci = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  const int64_t Co = w_shape[0], kT = w_shape[2], kH = w_shape[3], kW = w_shape[4];
  const int64_t To = gy.dim(2), Ho = gy.dim(3), Wo = gy.dim(4);
  const int64_t st = stride[0], sh = stride[1], sw = stride[2];
  const int64_t pt = pad[0], ph = pad[1], pw = pad[2];

  Tensor gw(w_shape);
  double* gwd = gw.data();
  const double* gyd = gy.data();
  const double* xd = x.data();

  for (int64_t co = 0; co < Co; ++co)
    for (int64_t ci = 0; ci < Ci; ++ci)
      for (int64_t kt = 0; kt < kT; ++kt) {
        const int64_t to_lo = std::max<int64_t>(0, ceil_div(pt - kt, st));
        const int64_t to_hi = std::min(To - 1, (T - 1 + pt - kt) / st);
        for (int64_t kh = 0; kh < kH; ++kh) {
          const int64_t ho_lo = std::max<int64_t>(0, ceil_div(ph - kh, sh));
          const int64_t ho_hi = std::min(Ho - 1, (H - 1 + ph - kh) / sh);
          for (int64_t kw = 0; kw < kW; ++kw) {
            const int64_t wo_lo = std::max<int64_t>(0, ceil_div(pw - kw, sw));
            const int64_t wo_hi = std::min(Wo - 1, (W - 1 + pw - kw) / sw);
            double acc = 0.0;
            for (int64_t n = 0; n < N; ++n)
              for (int64_t to = to_lo; to <= to_hi; ++to) {
                const int64_t ti = to * st + kt - pt;
                for (int64_t ho = ho_lo; ho <= ho_hi; ++ho) {
                  const int64_t hi = ho * sh + kh - ph;
                  const double* xrow =
                      xd + (((n * Ci + ci) * T + ti) * H + hi) * W + (kw - pw);
                  const double* gyrow =
                      gyd + (((n * Co + co) * To + to) * Ho + ho) * Wo;
                  if (sw == 1) {
                    for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                      acc += gyrow[wo] * xrow[wo];
                  } else {
                    for (int64_t wo = wo_lo; wo <= wo_hi; ++wo)
                      acc += gyrow[wo] * xrow[wo * sw];
                  }
                }
              }
            gwd[(((co * Ci + ci) * kT + kt) * kH + kh) * kW + kw] = acc;
          }
        }
      }
  return gw;
}

Tensor conv3d_backward_bias(const Tensor& gy) {
  const int64_t N = gy.dim(0), Co = gy.dim(1);
  const int64_t inner = gy.dim(2) * gy.dim(3) * gy.dim(4);
  Tensor gb({Co});
  const double* gyd = gy.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co) {
      const double* row = gyd + (n * Co + co) * inner;
      double acc = 0.0;
      for (int64_t i = 0; i < inner; ++i) acc += row[i];
      gb[co] += acc;
    }
  return gb;
}

BnStats bn_batch_stats(const Tensor& x, double eps) {
  check_5d(x, "batch_norm");
  const int64_t N = x.dim(0), C = x.dim(1);
  const int64_t inner = x.dim(2) * x.dim(3) * x.dim(4);
  const int64_t M = N * inner;
  BnStats s{Tensor({C}), Tensor({C})};
  const double* xd = x.data();
  for (int64_t c = 0; c < C; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* row = xd + (n * C + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        sum += row[i];
        sq += row[i] * row[i];
      }
    }
    const double mean = sum / static_cast<double>(M);
    double var = sq / static_cast<double>(M) - mean * mean;
    if (var < 0.0) var = 0.0;
    s.mean[c] = mean;
    s.invstd[c] = 1.0 / std::sqrt(var + eps);
  }
  return s;
}

Tensor bn_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  const BnStats& stats) {
  const int64_t N = x.dim(0), C = x.dim(1);
  const int64_t inner = x.dim(2) * x.dim(3) * x.dim(4);
  Tensor y(x.shape());
  const double* xd = x.data();
  double* yd = y.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const double a = gamma[c] * stats.invstd[c];
      const double b = beta[c] - a * stats.mean[c];
      const double* xr = xd + (n * C + c) * inner;
      double* yr = yd + (n * C + c) * inner;
      for (int64_t i = 0; i < inner; ++i) yr[i] = a * xr[i] + b;
    }
  return y;
}

Tensor bn_backward(const Tensor& gy, const Tensor& x, const Tensor& gamma,
                   const BnStats& stats, Tensor& ggamma, Tensor& gbeta) {
  const int64_t N = x.dim(0), C = x.dim(1);
  const int64_t inner = x.dim(2) * x.dim(3) * x.dim(4);
  const double M = static_cast<double>(N * inner);
  Tensor gx(x.shape());
  const double* xd = x.data();
  const double* gyd = gy.data();
  double* gxd = gx.data();
  for (int64_t c = 0; c < C; ++c) {
    const double mean = stats.mean[c], istd = stats.invstd[c];
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* xr = xd + (n * C + c) * inner;
      const double* gr = gyd + (n * C + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        sum_gy += gr[i];
        sum_gy_xhat += gr[i] * (xr[i] - mean) * istd;
      }
    }
    ggamma[c] += sum_gy_xhat;
    gbeta[c] += sum_gy;
    const double k = gamma[c] * istd / M;
    for (int64_t n = 0; n < N; ++n) {
      const double* xr = xd + (n * C + c) * inner;
      const double* gr = gyd + (n * C + c) * inner;
      double* or_ = gxd + (n * C + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        const double xhat = (xr[i] - mean) * istd;
        or_[i] = k * (M * gr[i] - sum_gy - xhat * sum_gy_xhat);
      }
    }
  }
  return gx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  const double* xd = x.data();
  double* yd = y.data();
  for (int64_t i = 0; i < x.size(); ++i) yd[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& gy, const Tensor& x) {
  Tensor gx(x.shape());
  const double* xd = x.data();
  const double* gd = gy.data();
  double* od = gx.data();
  for (int64_t i = 0; i < x.size(); ++i) od[i] = xd[i] > 0.0 ? gd[i] : 0.0;
  return gx;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y(x.shape());
  const double* xd = x.data();
  double* yd = y.data();
  for (int64_t i = 0; i < x.size(); ++i) yd[i] = 1.0 / (1.0 + std::exp(-xd[i]));
  return y;
}

Tensor sigmoid_backward(const Tensor& gy, const Tensor& y) {
  Tensor gx(y.shape());
  const double* yd = y.data();
  const double* gd = gy.data();
  double* od = gx.data();
  for (int64_t i = 0; i < y.size(); ++i) od[i] = gd[i] * yd[i] * (1.0 - yd[i]);
  return gx;
}

ShuffleMode shuffle_inverse(ShuffleMode mode) {
  switch (mode) {
    case ShuffleMode::kChannelToSpace: return ShuffleMode::kSpaceToChannel;
    case ShuffleMode::kSpaceToChannel: return ShuffleMode::kChannelToSpace;
    case ShuffleMode::kChannelToTime: return ShuffleMode::kTimeToChannel;
    case ShuffleMode::kTimeToChannel: return ShuffleMode::kChannelToTime;
  }
  throw std::logic_error("unreachable");
}

Tensor pixel_shuffle(const Tensor& x, ShuffleMode mode, int64_t r) {
  check_5d(x, "pixel_shuffle");
  if (r < 1) throw std::invalid_argument("pixel_shuffle: r must be >= 1");
  if (r == 1) return x;
  const int64_t N = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  const double* xd = x.data();

  auto idx = [](int64_t n, int64_t c, int64_t t, int64_t h, int64_t w, int64_t C_,
                int64_t T_, int64_t H_, int64_t W_) {
    return (((n * C_ + c) * T_ + t) * H_ + h) * W_ + w;
  };

  switch (mode) {
    case ShuffleMode::kChannelToSpace: {
      if (C % (r * r) != 0)
        throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
      const int64_t Co = C / (r * r), Ho = H * r, Wo = W * r;
      Tensor y({N, Co, T, Ho, Wo});
      double* yd = y.data();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < Co; ++c)
          for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < r; ++j) {
              const int64_t cin = c * r * r + i * r + j;
              for (int64_t t = 0; t < T; ++t)
                for (int64_t h = 0; h < H; ++h)
                  for (int64_t w = 0; w < W; ++w)
                    yd[idx(n, c, t, h * r + i, w * r + j, Co, T, Ho, Wo)] =
                        xd[idx(n, cin, t, h, w, C, T, H, W)];
            }
      return y;
    }
    case ShuffleMode::kSpaceToChannel: {
      if (H % r != 0 || W % r != 0)
        throw std::invalid_argument("pixel_shuffle: spatial dims not divisible by r");
      const int64_t Co = C * r * r, Ho = H / r, Wo = W / r;
      Tensor y({N, Co, T, Ho, Wo});
      double* yd = y.data();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
          for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < r; ++j) {
              const int64_t cout = c * r * r + i * r + j;
              for (int64_t t = 0; t < T; ++t)
                for (int64_t h = 0; h < Ho; ++h)
                  for (int64_t w = 0; w < Wo; ++w)
                    yd[idx(n, cout, t, h, w, Co, T, Ho, Wo)] =
                        xd[idx(n, c, t, h * r + i, w * r + j, C, T, H, W)];
            }
      return y;
    }
    case ShuffleMode::kChannelToTime: {
      if (C % r != 0)
        throw std::invalid_argument("pixel_shuffle: channels not divisible by r");
      const int64_t Co = C / r, To = T * r;
      Tensor y({N, Co, To, H, W});
      double* yd = y.data();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < Co; ++c)
          for (int64_t i = 0; i < r; ++i)
            for (int64_t t = 0; t < T; ++t)
              for (int64_t h = 0; h < H; ++h)
                for (int64_t w = 0; w < W; ++w)
                  yd[idx(n, c, t * r + i, h, w, Co, To, H, W)] =
                      xd[idx(n, c * r + i, t, h, w, C, T, H, W)];
      return y;
    }
    case ShuffleMode::kTimeToChannel: {
      if (T % r != 0)
        throw std::invalid_argument("pixel_shuffle: time not divisible by r");
      const int64_t Co = C * r, To = T / r;
      Tensor y({N, Co, To, H, W});
      double* yd = y.data();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
          for (int64_t i = 0; i < r; ++i)
            for (int64_t t = 0; t < To; ++t)
              for (int64_t h = 0; h < H; ++h)
                for (int64_t w = 0; w < W; ++w)
                  yd[idx(n, c * r + i, t, h, w, Co, To, H, W)] =
                      xd[idx(n, c, t * r + i, h, w, C, T, H, W)];
      return y;
    }
  }
  throw std::logic_error("unreachable");
}

Tensor avgpool_hw2_forward(const Tensor& x) {
  check_5d(x, "avgpool_hw2");
  const int64_t N = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  const int64_t Ho = H / 2, Wo = W / 2;
  if (Ho == 0 || Wo == 0) throw std::invalid_argument("avgpool_hw2: input too small");
  Tensor y({N, C, T, Ho, Wo});
  const double* xd = x.data();
  double* yd = y.data();
  for (int64_t nct = 0; nct < N * C * T; ++nct) {
    const double* xp = xd + nct * H * W;
    double* yp = yd + nct * Ho * Wo;
    for (int64_t h = 0; h < Ho; ++h)
      for (int64_t w = 0; w < Wo; ++w)
        yp[h * Wo + w] = 0.25 * (xp[(2 * h) * W + 2 * w] + xp[(2 * h) * W + 2 * w + 1] +
                                 xp[(2 * h + 1) * W + 2 * w] +
                                 xp[(2 * h + 1) * W + 2 * w + 1]);
  }
  return y;
}

Tensor avgpool_hw2_backward(const Tensor& gy, const std::vector<int64_t>& xs) {
  const int64_t N = xs[0], C = xs[1], T = xs[2], H = xs[3], W = xs[4];
  const int64_t Ho = gy.dim(3), Wo = gy.dim(4);
  Tensor gx(xs);
  const double* gd = gy.data();
  double* od = gx.data();
  for (int64_t nct = 0; nct < N * C * T; ++nct) {
    const double* gp = gd + nct * Ho * Wo;
    double* op = od + nct * H * W;
    for (int64_t h = 0; h < Ho; ++h)
      for (int64_t w = 0; w < Wo; ++w) {
        const double v = 0.25 * gp[h * Wo + w];
        op[(2 * h) * W + 2 * w] += v;
        op[(2 * h) * W + 2 * w + 1] += v;
        op[(2 * h + 1) * W + 2 * w] += v;
        op[(2 * h + 1) * W + 2 * w + 1] += v;
      }
  }
  return gx;
}

Tensor mean_t_forward(const Tensor& x) {
  check_5d(x, "mean_t");
  const int64_t N = x.dim(0), C = x.dim(1), T = x.dim(2), HW = x.dim(3) * x.dim(4);
  Tensor y({N, C, 1, x.dim(3), x.dim(4)});
  const double* xd = x.data();
  double* yd = y.data();
  const double inv = 1.0 / static_cast<double>(T);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    double* yp = yd + nc * HW;
    for (int64_t t = 0; t < T; ++t) {
      const double* xp = xd + (nc * T + t) * HW;
      for (int64_t i = 0; i < HW; ++i) yp[i] += xp[i];
    }
    for (int64_t i = 0; i < HW; ++i) yp[i] *= inv;
  }
  return y;
}

Tensor mean_t_backward(const Tensor& gy, const std::vector<int64_t>& xs) {
  const int64_t N = xs[0], C = xs[1], T = xs[2], HW = xs[3] * xs[4];
  Tensor gx(xs);
  const double* gd = gy.data();
  double* od = gx.data();
  const double inv = 1.0 / static_cast<double>(T);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* gp = gd + nc * HW;
    for (int64_t t = 0; t < T; ++t) {
      double* op = od + (nc * T + t) * HW;
      for (int64_t i = 0; i < HW; ++i) op[i] = gp[i] * inv;
    }
  }
  return gx;
}

Tensor concat_axis(const Tensor& a, const Tensor& b, int axis) {
  if (a.ndim() != b.ndim())
    throw std::invalid_argument("concat: rank mismatch");
  for (int i = 0; i < a.ndim(); ++i)
    if (i != axis && a.dim(i) != b.dim(i))
      throw std::invalid_argument("concat: shape mismatch " + shape_str(a) +
                                  " vs " + shape_str(b) + " on axis " +
                                  std::to_string(axis));
  std::vector<int64_t> ys = a.shape();
  ys[static_cast<size_t>(axis)] += b.dim(axis);

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= a.dim(i);
  for (int i = axis + 1; i < a.ndim(); ++i) inner *= a.dim(i);
  const int64_t da = a.dim(axis) * inner, db = b.dim(axis) * inner;

  Tensor y(ys);
  double* yd = y.data();
  const double* ad = a.data();
  const double* bd = b.data();
  for (int64_t o = 0; o < outer; ++o) {
    std::copy(ad + o * da, ad + (o + 1) * da, yd + o * (da + db));
    std::copy(bd + o * db, bd + (o + 1) * db, yd + o * (da + db) + da);
  }
  return y;
}

Tensor slice_axis(const Tensor& x, int axis, int64_t lo, int64_t hi) {
  if (lo < 0 || hi > x.dim(axis) || lo >= hi)
    throw std::invalid_argument("slice_axis: bad range");
  std::vector<int64_t> ys = x.shape();
  ys[static_cast<size_t>(axis)] = hi - lo;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
  const int64_t dx = x.dim(axis) * inner, dy = (hi - lo) * inner;
  Tensor y(ys);
  const double* xd = x.data();
  double* yd = y.data();
  for (int64_t o = 0; o < outer; ++o)
    std::copy(xd + o * dx + lo * inner, xd + o * dx + hi * inner, yd + o * dy);
  return y;
}

Tensor tail_t_forward(const Tensor& x, int64_t t_out) {
  check_5d(x, "tail_t");
  if (t_out < 1 || t_out > x.dim(2))
    throw std::invalid_argument("tail_t: bad target extent");
  return slice_axis(x, 2, x.dim(2) - t_out, x.dim(2));
}

Tensor tail_t_backward(const Tensor& gy, const std::vector<int64_t>& xs) {
  Tensor gx(xs);
  const int64_t N = xs[0], C = xs[1], T = xs[2], HW = xs[3] * xs[4];
  const int64_t To = gy.dim(2), t0 = T - To;
  const double* gd = gy.data();
  double* od = gx.data();
  for (int64_t nc = 0; nc < N * C; ++nc)
    for (int64_t t = 0; t < To; ++t)
      std::copy(gd + (nc * To + t) * HW, gd + (nc * To + t + 1) * HW,
                od + (nc * T + t0 + t) * HW);
  return gx;
}

Tensor site_normalize_forward(const Tensor& x, double eps) {
  check_5d(x, "site_normalize");
  const int64_t N = x.dim(0), C = x.dim(1), THW = x.dim(2) * x.dim(3) * x.dim(4);
  Tensor y(x.shape());
  const double* xd = x.data();
  double* yd = y.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t s = 0; s < THW; ++s) {
      double sq = 0.0;
      for (int64_t c = 0; c < C; ++c) {
        const double v = xd[(n * C + c) * THW + s];
        sq += v * v;
      }
      const double inv = 1.0 / (std::sqrt(sq) + eps);
      for (int64_t c = 0; c < C; ++c)
        yd[(n * C + c) * THW + s] = xd[(n * C + c) * THW + s] * inv;
    }
  return y;
}

Tensor site_normalize_backward(const Tensor& gy, const Tensor& x, double eps) {
  const int64_t N = x.dim(0), C = x.dim(1), THW = x.dim(2) * x.dim(3) * x.dim(4);
  Tensor gx(x.shape());
  const double* xd = x.data();
  const double* gd = gy.data();
  double* od = gx.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t s = 0; s < THW; ++s) {
      double sq = 0.0, dot = 0.0;
      for (int64_t c = 0; c < C; ++c) {
        const int64_t k = (n * C + c) * THW + s;
        sq += xd[k] * xd[k];
        dot += xd[k] * gd[k];
      }
      const double r = std::sqrt(sq);
      const double d = r + eps;
      const double scale = r > 0.0 ? dot / (r * d * d) : 0.0;
      for (int64_t c = 0; c < C; ++c) {
        const int64_t k = (n * C + c) * THW + s;
        od[k] = gd[k] / d - xd[k] * scale;
      }
    }
  return gx;
}

void sn_mat_vec(const Tensor& w, const Tensor& v, Tensor& out_u) {
  const int64_t Co = w.dim(0);
  const int64_t K = w.size() / Co;
  const double* wd = w.data();
  const double* vd = v.data();
  for (int64_t i = 0; i < Co; ++i) {
    double acc = 0.0;
    const double* row = wd + i * K;
    for (int64_t k = 0; k < K; ++k) acc += row[k] * vd[k];
    out_u[i] = acc;
  }
}

void sn_matt_vec(const Tensor& w, const Tensor& u, Tensor& out_v) {
  const int64_t Co = w.dim(0);
  const int64_t K = w.size() / Co;
  const double* wd = w.data();
  const double* ud = u.data();
  out_v.fill(0.0);
  for (int64_t i = 0; i < Co; ++i) {
    const double* row = wd + i * K;
    const double ui = ud[i];
    for (int64_t k = 0; k < K; ++k) out_v[k] += row[k] * ui;
  }
}

void l2_normalize_vec(Tensor& v, double eps) {
  double sq = 0.0;
  for (int64_t i = 0; i < v.size(); ++i) sq += v[i] * v[i];
  const double inv = 1.0 / (std::sqrt(sq) + eps);
  for (int64_t i = 0; i < v.size(); ++i) v[i] *= inv;
}

}  // namespace vidpred::nn
