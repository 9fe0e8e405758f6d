#include "vidpred/nn/layers.hpp"

#include <cmath>

namespace vidpred::nn {

Tensor he_init(const std::vector<int64_t>& w_shape, RngStream& rng) {
  int64_t fan_in = 1;
  for (size_t i = 1; i < w_shape.size(); ++i) fan_in *= w_shape[i];
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  Tensor w(w_shape);
  for (int64_t i = 0; i < w.size(); ++i) w[i] = std * rng.normal();
  return w;
}

Conv3dLayer::Conv3dLayer(std::string name, int64_t c_in, int64_t c_out,
                         Kernel3 kernel, Stride3 stride, Pad3 pad,
                         RngStream& init, bool bias)
    : name_(std::move(name)), stride_(stride), pad_(pad) {
  w_ = ag::leaf(he_init({c_out, c_in, kernel[0], kernel[1], kernel[2]}, init),
                true);
  if (bias) b_ = ag::leaf(Tensor({c_out}), true);
}

ag::Var Conv3dLayer::operator()(const ag::Var& x) const {
  return ag::conv3d(x, w_, b_, stride_, pad_);
}

void Conv3dLayer::collect(std::vector<ParamRef>& params,
                          std::vector<BufferRef>& bufs) {
  (void)bufs;
  params.push_back({name_ + "/w", w_});
  if (b_) params.push_back({name_ + "/b", b_});
}

SpectralConv3dLayer::SpectralConv3dLayer(std::string name, int64_t c_in,
                                         int64_t c_out, Kernel3 kernel,
                                         Stride3 stride, Pad3 pad,
                                         RngStream& init, bool bias)
    : Conv3dLayer(std::move(name), c_in, c_out, kernel, stride, pad, init,
                  bias) {
  u_ = Tensor({c_out});
  for (int64_t i = 0; i < c_out; ++i) u_[i] = init.normal();
  l2_normalize_vec(u_);
}

Tensor SpectralConv3dLayer::compute_v(const Tensor& u) const {
  Tensor v({w_->value.size() / w_->value.dim(0)});
  sn_matt_vec(w_->value, u, v);
  l2_normalize_vec(v);
  return v;
}

ag::Var SpectralConv3dLayer::forward(const ag::Var& x, bool update_u) {
  Tensor v = compute_v(u_);
  if (update_u) {
    sn_mat_vec(w_->value, v, u_);
    l2_normalize_vec(u_);
    v = compute_v(u_);
  }
  ag::Var w_hat = ag::sn_normalize(w_, u_, v);
  return ag::conv3d(x, w_hat, b_, stride_, pad_);
}

void SpectralConv3dLayer::collect(std::vector<ParamRef>& params,
                                  std::vector<BufferRef>& bufs) {
  Conv3dLayer::collect(params, bufs);
  bufs.push_back({name_ + "/sn_u", &u_});
}

void SpectralConv3dLayer::power_iterate(int iters) {
  for (int i = 0; i < iters; ++i) {
    Tensor v = compute_v(u_);
    sn_mat_vec(w_->value, v, u_);
    l2_normalize_vec(u_);
  }
}

double SpectralConv3dLayer::sigma_estimate() const {
  Tensor v = compute_v(u_);
  Tensor wv({w_->value.dim(0)});
  sn_mat_vec(w_->value, v, wv);
  double sigma = 0.0;
  for (int64_t i = 0; i < wv.size(); ++i) sigma += u_[i] * wv[i];
  return sigma;
}

BatchNorm3dLayer::BatchNorm3dLayer(std::string name, int64_t channels)
    : name_(std::move(name)),
      gamma_(ag::leaf(Tensor({channels}, 1.0), true)),
      beta_(ag::leaf(Tensor({channels}), true)),
      running_mean_({channels}),
      running_var_(Tensor({channels}, 1.0)) {}

ag::Var BatchNorm3dLayer::operator()(const ag::Var& x, bool training) {
  return ag::batch_norm(x, gamma_, beta_, training, &running_mean_,
                        &running_var_, momentum_, eps_);
}

void BatchNorm3dLayer::collect(std::vector<ParamRef>& params,
                               std::vector<BufferRef>& bufs) {
  params.push_back({name_ + "/gamma", gamma_});
  params.push_back({name_ + "/beta", beta_});
  bufs.push_back({name_ + "/running_mean", &running_mean_});
  bufs.push_back({name_ + "/running_var", &running_var_});
}

}  // namespace vidpred::nn
