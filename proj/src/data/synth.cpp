#include "vidpred/data/synth.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "vidpred/io/image.hpp"

namespace vidpred::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Wave {
  double fx, fy, phase, amp;
  double mix[3];  // per-channel weight
};

struct Sprite {
  double x, y, vx, vy, radius;
  double color[3];
};

// Band-limited periodic texture: integer x/y frequencies make horizontal
// circular shifts exact. Coarse waves dominate so frame-difference grows
// with displacement well past 10 px; the weak fine octave adds detail.
Tensor render_texture(int64_t h, int64_t w, RngStream& rng) {
  std::vector<Wave> waves;
  auto add_band = [&](std::initializer_list<int> fxs, double amp) {
    for (int fx : fxs) {
      Wave wv{};
      wv.fx = fx;
      wv.fy = static_cast<double>(rng.uniform_int(4));
      wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      wv.amp = amp * rng.uniform(0.7, 1.0);
      for (auto& m : wv.mix) m = rng.uniform(0.4, 1.0);
      waves.push_back(wv);
    }
  };
  add_band({1, 2, 3}, 0.16);    // coarse: periods w, w/2, w/3
  add_band({4, 5, 6}, 0.07);    // mid: periods ~13-20 px at w=80
  add_band({13, 16, 17}, 0.035);  // fine detail

  Tensor tex({3, h, w}, 0.5);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& wv : waves) {
        const double s = std::sin(2.0 * std::numbers::pi *
                                      (wv.fx * static_cast<double>(x) / static_cast<double>(w) +
                                       wv.fy * static_cast<double>(y) / static_cast<double>(h)) +
                                  wv.phase);
        for (int c = 0; c < 3; ++c) acc[c] += wv.amp * wv.mix[c] * s;
      }
      for (int64_t c = 0; c < 3; ++c)
        tex[(c * h + y) * w + x] =
            std::clamp(0.5 + acc[c], 0.05, 0.95);
    }
  return tex;
}

double torus_dist(double a, double b, double period) {
  double d = std::fabs(a - b);
  return std::min(d, period - d);
}

}  // namespace

void SynthSpec::validate() const {
  if (height < 16 || width < 16 || height % 16 != 0 || width % 16 != 0)
    throw std::invalid_argument("synth: canvas dims must be positive multiples of 16");
  if (pan_velocity < 0.0)
    throw std::invalid_argument("synth: pan_velocity must be >= 0");
  if (n_sprites < 0) throw std::invalid_argument("synth: n_sprites must be >= 0");
  if (sprite_velocity_min < 0.0 || sprite_velocity_max < sprite_velocity_min)
    throw std::invalid_argument("synth: bad sprite velocity range");
  if (length < 1 || n_sequences < 1)
    throw std::invalid_argument("synth: need length >= 1 and n_sequences >= 1");
}

std::vector<FrameSequence> synth_generate(const SynthSpec& spec, RngStream& rng) {
  spec.validate();
  const int64_t h = spec.height, w = spec.width;
  std::vector<FrameSequence> out;
  out.reserve(static_cast<size_t>(spec.n_sequences));

  for (int q = 0; q < spec.n_sequences; ++q) {
    // all draws are velocity-independent: specs differing only in
    // pan_velocity render the same content at different speeds
    Tensor tex = render_texture(h, w, rng);
    std::vector<Sprite> sprites;
    for (int i = 0; i < spec.n_sprites; ++i) {
      Sprite sp{};
      sp.x = rng.uniform(0.0, static_cast<double>(w));
      sp.y = rng.uniform(0.0, static_cast<double>(h));
      const double speed =
          rng.uniform(spec.sprite_velocity_min, spec.sprite_velocity_max);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      sp.vx = speed * std::cos(angle);
      sp.vy = speed * std::sin(angle);
      sp.radius = rng.uniform(3.0, 6.0);
      for (auto& c : sp.color) c = rng.uniform(0.05, 0.95);
      sprites.push_back(sp);
    }

    FrameSequence seq;
    char sid[16];
    std::snprintf(sid, sizeof(sid), "seq%03d", q);
    seq.source_id = spec.seq_prefix + sid;
    seq.frames = Tensor({3, spec.length, h, w});
    for (int64_t k = 0; k < spec.length; ++k) {
      const auto shift = static_cast<int64_t>(
          std::llround(spec.pan_velocity * static_cast<double>(k)));
      for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
          for (int64_t x = 0; x < w; ++x) {
            const int64_t sx = ((x - shift) % w + w) % w;
            seq.frames[((c * spec.length + k) * h + y) * w + x] =
                tex[(c * h + y) * w + sx];
          }
      for (const auto& sp : sprites) {
        const double cx = std::fmod(std::fmod(sp.x + sp.vx * static_cast<double>(k),
                                              static_cast<double>(w)) + w, static_cast<double>(w));
        const double cy = std::fmod(std::fmod(sp.y + sp.vy * static_cast<double>(k),
                                              static_cast<double>(h)) + h, static_cast<double>(h));
        const auto r = static_cast<int64_t>(std::ceil(sp.radius)) + 1;
        for (int64_t dy = -r; dy <= r; ++dy)
          for (int64_t dx = -r; dx <= r; ++dx) {
            const int64_t px = ((static_cast<int64_t>(cx) + dx) % w + w) % w;
            const int64_t py = ((static_cast<int64_t>(cy) + dy) % h + h) % h;
            const double d = std::hypot(torus_dist(static_cast<double>(px) + 0.5, cx + 0.5, static_cast<double>(w)),
                                        torus_dist(static_cast<double>(py) + 0.5, cy + 0.5, static_cast<double>(h)));
            const double alpha = std::clamp(sp.radius + 0.5 - d, 0.0, 1.0);
            if (alpha <= 0.0) continue;
            for (int64_t c = 0; c < 3; ++c) {
              double& v = seq.frames[((c * spec.length + k) * h + py) * w + px];
              v = alpha * sp.color[static_cast<size_t>(c)] + (1.0 - alpha) * v;
            }
          }
      }
    }
    seq.validate();
    out.push_back(std::move(seq));
  }
  return out;
}

void synth_write(const SynthSpec& spec, const std::vector<FrameSequence>& seqs,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  json motion = json::object();
  {  // merge: batches with distinct prefixes may share one root
    std::ifstream existing(out_dir + "/motion.json");
    if (existing) motion = json::parse(existing, nullptr, /*allow_exceptions=*/false);
    if (motion.is_discarded() || !motion.is_object()) motion = json::object();
  }
  for (const auto& seq : seqs) {
    const std::string dir = out_dir + "/" + seq.source_id;
    fs::create_directories(dir);
    for (int64_t k = 0; k < seq.length(); ++k) {
      char name[16];
      std::snprintf(name, sizeof(name), "%04d.png", static_cast<int>(k));
      io::save_image_rgb(dir + "/" + name, seq.frame(k));
    }
    motion[seq.source_id] = spec.pan_velocity;
  }
  std::ofstream mj(out_dir + "/motion.json", std::ios::trunc);
  if (!mj) throw std::runtime_error("synth: cannot write motion.json");
  mj << motion.dump(2) << "\n";
}

}  // namespace vidpred::data
