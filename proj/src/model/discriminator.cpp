#include "vidpred/model/discriminator.hpp"

#include <stdexcept>
#include <string>

namespace vidpred {

void DiscriminatorConfig::validate() const {
  if (stage_blocks.empty() || stage_blocks.size() != stage_channels.size())
    throw std::invalid_argument("discriminator: stage_blocks/stage_channels length mismatch");
  for (int n : stage_blocks)
    if (n < 1) throw std::invalid_argument("discriminator: stage needs >= 1 block");
  for (size_t i = 0; i < stage_channels.size(); ++i) {
    if (stage_channels[i] < 1)
      throw std::invalid_argument("discriminator: channel width must be positive");
    if (i > 0 && stage_channels[i] <= stage_channels[i - 1])
      throw std::invalid_argument("discriminator: channels must be strictly increasing");
  }
  if (clip_t < 1) throw std::invalid_argument("discriminator: clip_t must be >= 1");
}

std::array<int64_t, 2> DiscriminatorConfig::patch_grid(int64_t h, int64_t w) const {
  for (size_t s = 0; s < stage_blocks.size(); ++s) {
    h /= 2;
    w /= 2;
  }
  if (h < 1 || w < 1)
    throw std::invalid_argument("discriminator: input too small for stage count");
  return {h, w};
}

DiscriminatorConfig DiscriminatorConfig::paper_scale() { return DiscriminatorConfig{}; }

DiscriminatorConfig DiscriminatorConfig::desk_scale() {
  DiscriminatorConfig c;
  c.stage_channels = {8, 16, 32, 64, 128};
  return c;
}

DiscriminatorConfig DiscriminatorConfig::tiny() {
  DiscriminatorConfig c;
  c.stage_blocks = {1, 1};
  c.stage_channels = {4, 6};
  return c;
}

ag::Var Discriminator::ResBlock::apply(const ag::Var& x, bool sn, bool update_u) {
  auto run = [&](nn::SpectralConv3dLayer& c, const ag::Var& v) {
    return sn ? c.forward(v, update_u) : c(v);
  };
  ag::Var h = run(conv1, ag::relu(x));
  h = run(conv2, ag::relu(h));
  ag::Var s = proj ? run(*proj, x) : x;
  return ag::add(s, h);
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, uint64_t init_seed)
    : cfg_(cfg) {
  cfg_.validate();
  RngStream init(init_seed, /*stream=*/1);
  const size_t n_stages = cfg_.stage_blocks.size();
  stages_.resize(n_stages);
  int64_t ci = 3;
  for (size_t s = 0; s < n_stages; ++s) {
    const int64_t co = cfg_.stage_channels[s];
    for (int b = 0; b < cfg_.stage_blocks[s]; ++b) {
      const std::string base =
          "d/s" + std::to_string(s + 1) + "_b" + std::to_string(b + 1);
      ResBlock blk{nn::SpectralConv3dLayer(base + "/conv1", ci, co, {3, 3, 3},
                                           {1, 1, 1}, {1, 1, 1}, init),
                   nn::SpectralConv3dLayer(base + "/conv2", co, co, {3, 3, 3},
                                           {1, 1, 1}, {1, 1, 1}, init)};
      if (ci != co)
        blk.proj.emplace(base + "/proj", ci, co, nn::Kernel3{1, 1, 1},
                         nn::Stride3{1, 1, 1}, nn::Pad3{0, 0, 0}, init,
                         /*bias=*/false);
      stages_[s].push_back(std::move(blk));
      ci = co;
    }
  }
  score_ = nn::SpectralConv3dLayer("d/score", ci, 1, {1, 1, 1}, {1, 1, 1},
                                   {0, 0, 0}, init);
}

ag::Var Discriminator::forward(const ag::Var& clip, const ag::Var& candidate,
                               bool update_u) {
  const auto& cs = clip->value.shape();
  const auto& fs = candidate->value.shape();
  if (cs.size() != 5 || fs.size() != 5 || cs[1] != 3 || fs[1] != 3)
    throw std::invalid_argument("discriminator: inputs must be (N,3,T,H,W)");
  if (cs[2] != cfg_.clip_t || fs[2] != 1)
    throw std::invalid_argument("discriminator: clip length " + std::to_string(cs[2]) +
                                " / candidate length " + std::to_string(fs[2]) +
                                " do not match config");
  if (cs[0] != fs[0] || cs[3] != fs[3] || cs[4] != fs[4])
    throw std::invalid_argument("discriminator: clip and candidate shapes disagree");

  ag::Var x = ag::concat(clip, candidate, /*axis=*/2);
  for (auto& stage : stages_) {
    for (auto& blk : stage) x = blk.apply(x, cfg_.spectral_norm, update_u);
    x = ag::avgpool_hw2(x);
  }
  x = ag::mean_t(x);
  return cfg_.spectral_norm ? score_.forward(x, update_u) : score_(x);
}

PatchLogits Discriminator::discriminate(const Tensor& clip, const Tensor& candidate) {
  const auto& cs = clip.shape();
  const auto& fs = candidate.shape();
  if (cs.size() != 4 || fs.size() != 3)
    throw std::invalid_argument("discriminator: expects (3,T,H,W) clip and (3,H,W) frame");
  Tensor c5 = clip.reshaped({1, cs[0], cs[1], cs[2], cs[3]});
  Tensor f5 = candidate.reshaped({1, fs[0], 1, fs[1], fs[2]});
  ag::Var out = forward(ag::constant(std::move(c5)), ag::constant(std::move(f5)),
                        /*update_u=*/false);
  const auto& os = out->value.shape();
  return PatchLogits{out->value.reshaped({os[3], os[4]})};
}

std::vector<nn::ParamRef> Discriminator::params() {
  std::vector<nn::ParamRef> p;
  std::vector<nn::BufferRef> b;
  for (auto& stage : stages_)
    for (auto& blk : stage) {
      blk.conv1.collect(p, b);
      blk.conv2.collect(p, b);
      if (blk.proj) blk.proj->collect(p, b);
    }
  score_.collect(p, b);
  return p;
}

std::vector<nn::BufferRef> Discriminator::buffers() {
  std::vector<nn::ParamRef> p;
  std::vector<nn::BufferRef> b;
  for (auto& stage : stages_)
    for (auto& blk : stage) {
      blk.conv1.collect(p, b);
      blk.conv2.collect(p, b);
      if (blk.proj) blk.proj->collect(p, b);
    }
  score_.collect(p, b);
  return b;
}

void Discriminator::power_iterate(int iters) {
  for (auto& stage : stages_)
    for (auto& blk : stage) {
      blk.conv1.power_iterate(iters);
      blk.conv2.power_iterate(iters);
      if (blk.proj) blk.proj->power_iterate(iters);
    }
  score_.power_iterate(iters);
}

std::vector<double> Discriminator::sigma_estimates() const {
  std::vector<double> out;
  for (const auto& stage : stages_)
    for (const auto& blk : stage) {
      out.push_back(blk.conv1.sigma_estimate());
      out.push_back(blk.conv2.sigma_estimate());
      if (blk.proj) out.push_back(blk.proj->sigma_estimate());
    }
  out.push_back(score_.sigma_estimate());
  return out;
}

}  // namespace vidpred
