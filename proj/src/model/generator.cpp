#include "vidpred/model/generator.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace vidpred {
namespace {

int64_t conv_extent(int64_t t, int64_t k, int64_t s, int64_t p) {
  return (t + 2 * p - k) / s + 1;
}

std::string lvl(const char* base, int level, int idx = 0) {
  std::string s = "g/" + std::string(base) + std::to_string(level);
  if (idx > 0) s += "_" + std::to_string(idx);
  return s;
}

}  // namespace

int64_t GeneratorConfig::td_channels(int level) const {
  return std::max<int64_t>(1, channels.at(static_cast<size_t>(level - 1)) / 2);
}

int64_t GeneratorConfig::temporal_extent(int level) const {
  int64_t t = input_t;
  for (int l = 1; l <= level; ++l)
    t = conv_extent(t, 3, temporal_strides.at(static_cast<size_t>(l - 1)), 1);
  return t;
}

std::array<int64_t, 3> GeneratorConfig::lateral_kernels(int level) const {
  int64_t remaining = temporal_extent(level) - 1;
  std::array<int64_t, 3> k{};
  for (int i = 0; i < 3; ++i) {
    const int64_t slots = 3 - i;
    const int64_t r = (remaining + slots - 1) / slots;  // ceil
    k[static_cast<size_t>(i)] = r + 1;
    remaining -= r;
  }
  return k;
}

bool GeneratorConfig::noise_at(int level) const {
  if (!noise.levels_applied.empty()) {
    for (int l : noise.levels_applied)
      if (l == level) return true;
    return false;
  }
  return level >= levels - 1;  // default: the two deepest levels
}

void GeneratorConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("generator: levels must be >= 1");
  if (channels.size() != static_cast<size_t>(levels))
    throw std::invalid_argument("generator: channels per level mismatch");
  if (temporal_strides.size() != static_cast<size_t>(levels))
    throw std::invalid_argument("generator: temporal strides per level mismatch");
  for (int64_t c : channels)
    if (c < 2) throw std::invalid_argument("generator: level width must be >= 2");
  if (input_t < 1) throw std::invalid_argument("generator: input_t must be >= 1");
  int64_t t = input_t;
  for (int l = 1; l <= levels; ++l) {
    const int64_t s = temporal_strides.at(static_cast<size_t>(l - 1));
    if (s < 1) throw std::invalid_argument("generator: temporal stride must be >= 1");
    t = conv_extent(t, 3, s, 1);
    if (t < 1)
      throw std::invalid_argument("generator: temporal extent collapses below 1 at level " +
                                  std::to_string(l));
  }
  if (noise.rate < 0.0 || noise.rate >= 1.0)
    throw std::invalid_argument("generator: noise rate must lie in [0,1)");
  for (int l : noise.levels_applied)
    if (l < 1 || l > levels)
      throw std::invalid_argument("generator: noise level out of range");
  for (int l = 1; l <= levels; ++l) {
    const int64_t cs = channels[static_cast<size_t>(l - 1)] +
                       (l < levels ? td_channels(l + 1) : 0);
    if (cs % 4 != 0)
      throw std::invalid_argument(
          "generator: top-down input width at level " + std::to_string(l) +
          " must be divisible by 4 for the subpixel upscale");
  }
}

GeneratorConfig GeneratorConfig::paper_scale() { return GeneratorConfig{}; }

GeneratorConfig GeneratorConfig::desk_scale() {
  GeneratorConfig c;
  c.channels = {8, 16, 32, 64};
  return c;
}

GeneratorConfig GeneratorConfig::tiny() {
  GeneratorConfig c;
  c.channels = {4, 8, 8, 8};
  return c;
}

ag::Var Generator::Block::apply(const ag::Var& x, bool training,
                                RngStream* noise_rng, double noise_rate,
                                bool noise_active) {
  ag::Var in = pre_shuffle
                   ? ag::pixel_shuffle(x, nn::ShuffleMode::kChannelToSpace, 2)
                   : x;
  ag::Var h = conv(in);
  h = bn(h, training);
  ag::Var s;
  if (proj) {
    s = (*proj)(in);
  } else if (tail_skip) {
    s = ag::tail_t(in, h->value.dim(2));
  } else {
    s = in;
  }
  ag::Var y = ag::add(h, s);
  if (noisy && noise_active && noise_rng != nullptr && noise_rate > 0.0)
    y = ag::dropout(y, noise_rate, *noise_rng, true);
  return ag::relu(y);
}

Generator::Generator(const GeneratorConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  RngStream init(init_seed, /*stream=*/0);
  const int L = cfg_.levels;
  bu_.reserve(static_cast<size_t>(L));
  lat_.reserve(static_cast<size_t>(L));
  td_.reserve(static_cast<size_t>(L));

  for (int l = 1; l <= L; ++l) {
    const int64_t ci = (l == 1) ? 3 : cfg_.channels[static_cast<size_t>(l - 2)];
    const int64_t co = cfg_.channels[static_cast<size_t>(l - 1)];
    const int64_t st = cfg_.temporal_strides[static_cast<size_t>(l - 1)];
    Block b{nn::Conv3dLayer(lvl("bu", l) + "/conv", ci, co, {3, 3, 3},
                            {st, 2, 2}, {1, 1, 1}, init),
            nn::BatchNorm3dLayer(lvl("bu", l) + "/bn", co),
            nn::Conv3dLayer(lvl("bu", l) + "/proj", ci, co, {1, 1, 1},
                            {st, 2, 2}, {0, 0, 0}, init, /*bias=*/false)};
    bu_.push_back(std::move(b));
  }

  for (int l = 1; l <= L; ++l) {
    const int64_t c = cfg_.channels[static_cast<size_t>(l - 1)];
    const auto kt = cfg_.lateral_kernels(l);
    std::array<Block, 3> blocks;
    for (int i = 0; i < 3; ++i) {
      Block b{nn::Conv3dLayer(lvl("lat", l, i + 1) + "/conv", c, c,
                              {kt[static_cast<size_t>(i)], 3, 3}, {1, 1, 1},
                              {0, 1, 1}, init),
              nn::BatchNorm3dLayer(lvl("lat", l, i + 1) + "/bn", c)};
      b.tail_skip = true;
      blocks[static_cast<size_t>(i)] = std::move(b);
    }
    lat_.push_back(std::move(blocks));
  }

  for (int l = 1; l <= L; ++l) {
    const int64_t cs = cfg_.channels[static_cast<size_t>(l - 1)] +
                       (l < L ? cfg_.td_channels(l + 1) : 0);
    const int64_t shuffled = cs / 4;  // channel->space PS r=2 ahead of TD_l,2
    const int64_t out = cfg_.td_channels(l);
    const bool noisy = cfg_.noise_at(l);
    std::array<Block, 2> blocks;
    blocks[0] = Block{nn::Conv3dLayer(lvl("td", l, 1) + "/conv", cs, cs,
                                      {1, 3, 3}, {1, 1, 1}, {0, 1, 1}, init),
                      nn::BatchNorm3dLayer(lvl("td", l, 1) + "/bn", cs)};
    blocks[0].noisy = noisy;
    blocks[1] = Block{nn::Conv3dLayer(lvl("td", l, 2) + "/conv", shuffled, out,
                                      {1, 3, 3}, {1, 1, 1}, {0, 1, 1}, init),
                      nn::BatchNorm3dLayer(lvl("td", l, 2) + "/bn", out)};
    if (shuffled != out)
      blocks[1].proj.emplace(lvl("td", l, 2) + "/proj", shuffled, out,
                             nn::Kernel3{1, 1, 1}, nn::Stride3{1, 1, 1},
                             nn::Pad3{0, 0, 0}, init, /*bias=*/false);
    blocks[1].pre_shuffle = true;
    blocks[1].noisy = noisy;
    td_.push_back(std::move(blocks));
  }

  head_ = nn::Conv3dLayer("g/head/conv", cfg_.td_channels(1), 3, {1, 3, 3},
                          {1, 1, 1}, {0, 1, 1}, init);
  head_.bias()->value.fill(0.0);
}

void Generator::check_clip_shape(const std::vector<int64_t>& s) const {
  if (s.size() != 5 || s[1] != 3)
    throw std::invalid_argument("generator: clip must be (N,3,T,H,W)");
  if (s[2] != cfg_.input_t)
    throw std::invalid_argument("generator: clip has T=" + std::to_string(s[2]) +
                                ", configured input_t=" + std::to_string(cfg_.input_t));
  const int64_t div = int64_t{1} << cfg_.levels;
  if (s[3] % div != 0 || s[4] % div != 0)
    throw std::invalid_argument("generator: H and W must be divisible by " +
                                std::to_string(div));
}

ag::Var Generator::forward(const ag::Var& clip, RngStream* noise_rng,
                           bool training, ForwardTrace* trace) {
  check_clip_shape(clip->value.shape());
  const int L = cfg_.levels;
  const bool noise_active =
      noise_on_ && (training || cfg_.noise.active_at_inference);

  std::vector<ag::Var> u(static_cast<size_t>(L) + 1);
  u[0] = clip;
  if (trace) {
    trace->u_shapes.clear();
    trace->s_shapes.assign(static_cast<size_t>(L) + 1, {});
    trace->d_shapes.assign(static_cast<size_t>(L) + 1, {});
    trace->u_shapes.push_back(clip->value.shape());
  }
  for (int l = 1; l <= L; ++l) {
    u[static_cast<size_t>(l)] = bu_[static_cast<size_t>(l - 1)].apply(
        u[static_cast<size_t>(l - 1)], training, nullptr, 0.0, false);
    if (trace) trace->u_shapes.push_back(u[static_cast<size_t>(l)]->value.shape());
  }

  ag::Var d;
  for (int l = L; l >= 1; --l) {
    ag::Var s = u[static_cast<size_t>(l)];
    for (auto& blk : lat_[static_cast<size_t>(l - 1)])
      s = blk.apply(s, training, nullptr, 0.0, false);
    if (l < L) s = ag::concat(s, d, /*axis=*/1);
    if (trace) trace->s_shapes[static_cast<size_t>(l)] = s->value.shape();
    ag::Var t1 = td_[static_cast<size_t>(l - 1)][0].apply(
        s, training, noise_rng, cfg_.noise.rate, noise_active);
    d = td_[static_cast<size_t>(l - 1)][1].apply(t1, training, noise_rng,
                                                 cfg_.noise.rate, noise_active);
    if (trace) trace->d_shapes[static_cast<size_t>(l)] = d->value.shape();
  }
  return ag::sigmoid(head_(d));
}

Tensor Generator::predict(const Tensor& clip, RngStream* noise_rng) {
  const auto& s = clip.shape();
  if (s.size() != 4)
    throw std::invalid_argument("generator: predict expects (3,T,H,W)");
  Tensor batched = clip.reshaped({1, s[0], s[1], s[2], s[3]});
  ag::Var out = forward(ag::constant(std::move(batched)), noise_rng,
                        /*training=*/false);
  return out->value.reshaped({3, s[2], s[3]});
}

Tensor Generator::rollout(const Tensor& clip, int n_steps, RngStream* noise_rng) {
  const auto& s = clip.shape();
  if (s.size() != 4 || s[1] != cfg_.input_t)
    throw std::invalid_argument("generator: rollout expects (3,input_t,H,W)");
  const int64_t T = s[1], H = s[2], W = s[3];
  const int64_t K = n_steps;
  Tensor window = clip;
  Tensor out({3, K, H, W});
  const int64_t plane = H * W;
  for (int k = 0; k < n_steps; ++k) {
    Tensor next = predict(window, noise_rng);  // (3,H,W)
    for (int64_t c = 0; c < 3; ++c)
      std::copy(next.data() + c * plane, next.data() + (c + 1) * plane,
                out.data() + (c * K + k) * plane);
    Tensor shifted({3, T, H, W});
    for (int64_t c = 0; c < 3; ++c) {
      // drop the oldest frame, append the prediction
      std::copy(window.data() + (c * T + 1) * plane,
                window.data() + (c + 1) * T * plane,
                shifted.data() + c * T * plane);
      std::copy(next.data() + c * plane, next.data() + (c + 1) * plane,
                shifted.data() + (c * T + T - 1) * plane);
    }
    window = std::move(shifted);
  }
  return out;
}

std::vector<nn::ParamRef> Generator::params() {
  std::vector<nn::ParamRef> p;
  std::vector<nn::BufferRef> b;
  for (auto& blk : bu_) {
    blk.conv.collect(p, b);
    blk.bn.collect(p, b);
    if (blk.proj) blk.proj->collect(p, b);
  }
  for (auto& level : lat_)
    for (auto& blk : level) {
      blk.conv.collect(p, b);
      blk.bn.collect(p, b);
      if (blk.proj) blk.proj->collect(p, b);
    }
  for (auto& level : td_)
    for (auto& blk : level) {
      blk.conv.collect(p, b);
      blk.bn.collect(p, b);
      if (blk.proj) blk.proj->collect(p, b);
    }
  std::vector<nn::BufferRef> hb;
  head_.collect(p, hb);
  return p;
}

std::vector<nn::BufferRef> Generator::buffers() {
  std::vector<nn::ParamRef> p;
  std::vector<nn::BufferRef> b;
  for (auto& blk : bu_) {
    blk.conv.collect(p, b);
    blk.bn.collect(p, b);
    if (blk.proj) blk.proj->collect(p, b);
  }
  for (auto& level : lat_)
    for (auto& blk : level) {
      blk.conv.collect(p, b);
      blk.bn.collect(p, b);
    }
  for (auto& level : td_)
    for (auto& blk : level) {
      blk.conv.collect(p, b);
      blk.bn.collect(p, b);
      if (blk.proj) blk.proj->collect(p, b);
    }
  head_.collect(p, b);
  return b;
}

}  // namespace vidpred
