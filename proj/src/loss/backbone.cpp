#include "vidpred/loss/backbone.hpp"

#include "json.hpp"

#include <stdexcept>

#include "vidpred/io/container.hpp"
#include "vidpred/nn/layers.hpp"

namespace vidpred {

using nlohmann::json;

PerceptualBackbone PerceptualBackbone::identity() {
  PerceptualBackbone b;
  b.identity_ = true;
  b.init_lin_uniform();
  return b;
}

PerceptualBackbone PerceptualBackbone::random_stub(uint64_t seed) {
  return random_with_layout({{6}, {8}, {10}}, seed);
}

PerceptualBackbone PerceptualBackbone::random_with_layout(
    std::vector<std::vector<int64_t>> blocks, uint64_t seed) {
  if (blocks.empty())
    throw std::invalid_argument("backbone: need at least one block");
  PerceptualBackbone b;
  RngStream rng(seed, /*stream=*/7);
  int64_t ci = 3;
  for (const auto& widths : blocks) {
    if (widths.empty())
      throw std::invalid_argument("backbone: empty block");
    std::vector<ConvW> convs;
    for (int64_t co : widths) {
      ConvW c{nn::he_init({co, ci, 1, 3, 3}, rng), Tensor({co})};
      for (int64_t i = 0; i < co; ++i) c.b[i] = rng.uniform(-0.1, 0.1);
      convs.push_back(std::move(c));
      ci = co;
    }
    b.blocks_.push_back(std::move(convs));
  }
  b.init_lin_uniform();
  return b;
}

void PerceptualBackbone::init_lin_uniform() {
  lin_.clear();
  for (size_t l = 0; l < n_blocks(); ++l) {
    const int64_t c = block_channels(l);
    lin_.emplace_back(std::vector<int64_t>{c}, 1.0 / static_cast<double>(c));
  }
}

size_t PerceptualBackbone::n_blocks() const {
  return identity_ ? 1 : blocks_.size();
}

int64_t PerceptualBackbone::block_channels(size_t block) const {
  if (identity_) return 3;
  return blocks_.at(block).back().w.dim(0);
}

void PerceptualBackbone::set_lin_weights(size_t block, Tensor w) {
  if (w.ndim() != 1 || w.dim(0) != block_channels(block))
    throw std::invalid_argument("backbone: lin weight shape mismatch");
  for (int64_t i = 0; i < w.size(); ++i)
    if (w[i] < 0.0)
      throw std::invalid_argument("backbone: lin weights must be non-negative");
  lin_.at(block) = std::move(w);
}

std::vector<ag::Var> PerceptualBackbone::features(const ag::Var& frame) const {
  auto tap = [&](const ag::Var& v) {
    return output_scale_ == 1.0 ? v : ag::affine(v, output_scale_, 0.0);
  };
  if (identity_) return {tap(frame)};
  std::vector<ag::Var> out;
  ag::Var x = frame;
  for (size_t l = 0; l < blocks_.size(); ++l) {
    if (l > 0) x = ag::avgpool_hw2(x);
    for (const auto& c : blocks_[l]) {
      ag::Var w = ag::constant(c.w);
      ag::Var b = ag::constant(c.b);
      x = ag::relu(ag::conv3d(x, w, b, {1, 1, 1}, {0, 1, 1}));
    }
    out.push_back(tap(x));
  }
  return out;
}

std::vector<Tensor> PerceptualBackbone::features_raw(const Tensor& frame) const {
  auto tap = [&](Tensor v) {
    if (output_scale_ != 1.0) v.scale_(output_scale_);
    return v;
  };
  if (identity_) return {tap(frame)};
  std::vector<Tensor> out;
  Tensor x = frame;
  for (size_t l = 0; l < blocks_.size(); ++l) {
    if (l > 0) x = nn::avgpool_hw2_forward(x);
    for (const auto& c : blocks_[l])
      x = nn::relu_forward(nn::conv3d_forward(x, c.w, c.b, {1, 1, 1}, {0, 1, 1}));
    out.push_back(tap(x));
  }
  return out;
}

void PerceptualBackbone::save(const std::string& path) const {
  io::Container c;
  json meta;
  meta["format"] = "perceptual-backbone";
  meta["kind"] = identity_ ? "identity" : "conv";
  json layout = json::array();
  for (size_t l = 0; l < blocks_.size(); ++l) {
    json widths = json::array();
    for (const auto& cw : blocks_[l]) widths.push_back(cw.w.dim(0));
    layout.push_back(widths);
  }
  meta["blocks"] = layout;
  c.meta = meta.dump();
  for (size_t l = 0; l < blocks_.size(); ++l)
    for (size_t k = 0; k < blocks_[l].size(); ++k) {
      const std::string base =
          "b" + std::to_string(l + 1) + "/c" + std::to_string(k + 1);
      c.arrays[base + "/w"] = blocks_[l][k].w;
      c.arrays[base + "/b"] = blocks_[l][k].b;
    }
  for (size_t l = 0; l < lin_.size(); ++l)
    c.arrays["lin/b" + std::to_string(l + 1)] = lin_[l];
  c.save(path);
}

PerceptualBackbone PerceptualBackbone::load(const std::string& path) {
  io::Container c = io::Container::load(path);
  json meta = json::parse(c.meta);
  if (meta.value("format", "") != "perceptual-backbone")
    throw std::runtime_error("backbone: " + path + " is not a backbone file");
  PerceptualBackbone b;
  if (meta.value("kind", "conv") == "identity") {
    b.identity_ = true;
  } else {
    int64_t ci = 3;
    size_t l = 0;
    for (const auto& widths : meta.at("blocks")) {
      std::vector<ConvW> convs;
      size_t k = 0;
      for (const auto& wj : widths) {
        const auto co = wj.get<int64_t>();
        const std::string base =
            "b" + std::to_string(l + 1) + "/c" + std::to_string(k + 1);
        ConvW cw{c.expect(base + "/w", {co, ci, 1, 3, 3}),
                 c.expect(base + "/b", {co})};
        convs.push_back(std::move(cw));
        ci = co;
        ++k;
      }
      b.blocks_.push_back(std::move(convs));
      ++l;
    }
  }
  b.init_lin_uniform();
  for (size_t l = 0; l < b.n_blocks(); ++l) {
    const std::string key = "lin/b" + std::to_string(l + 1);
    if (c.has(key)) b.set_lin_weights(l, c.get(key));
  }
  return b;
}

}  // namespace vidpred
