#include "vidpred/config.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace vidpred {

using Json = nlohmann::ordered_json;

GeneratorConfig RunConfig::generator() const {
  GeneratorConfig g;
  g.levels = static_cast<int>(gen_channels.size());
  g.channels = gen_channels;
  g.input_t = input_t;
  g.temporal_strides = gen_temporal_strides;
  g.noise.rate = noise_rate;
  g.noise.active_at_inference = noise_at_inference;
  return g;
}

DiscriminatorConfig RunConfig::discriminator() const {
  DiscriminatorConfig d;
  d.stage_blocks = disc_stage_blocks;
  d.stage_channels = disc_stage_channels;
  d.clip_t = input_t;
  return d;
}

train::PhaseSchedule RunConfig::schedule(int64_t n_train_samples) const {
  if (n_train_samples <= 0) throw std::invalid_argument("schedule: empty training set");
  const int64_t per_epoch =
      (n_train_samples + opt.batch_size - 1) / opt.batch_size;
  auto resolve = [&](int64_t steps, double epochs) {
    if (steps >= 0) return steps;
    return static_cast<int64_t>(std::llround(epochs * static_cast<double>(per_epoch)));
  };
  train::PhaseSchedule s;
  s.variant = variant_parse(variant);
  s.phase1_steps = resolve(phase1_steps, phase1_epochs);
  if (variant_adversarial(s.variant)) {
    s.phase2_steps = resolve(phase2_steps, phase2_epochs);
    s.phase3_steps = resolve(phase3_steps, phase3_epochs);
  }
  s.validate();
  return s;
}

void RunConfig::validate() const {
  if (frame_h <= 0 || frame_w <= 0) throw std::invalid_argument("config: frame size must be positive");
  const int64_t div = int64_t{1} << gen_channels.size();
  if (frame_h % div != 0 || frame_w % div != 0)
    throw std::invalid_argument("config: frame size must be divisible by 2^levels = " +
                                std::to_string(div));
  generator().validate();
  discriminator().validate();
  opt.validate();
  variant_parse(variant);
  if (backbone != "stub" && backbone != "identity" && backbone != "pretrained")
    throw std::invalid_argument("config: backbone must be stub | identity | pretrained");
  if (backbone == "pretrained" && backbone_weights.empty())
    throw std::invalid_argument("config: pretrained backbone needs backbone_weights");
  if (phase1_epochs < 0 || phase2_epochs < 0 || phase3_epochs < 0)
    throw std::invalid_argument("config: negative phase epochs");
  if (sample_every < 0 || ckpt_every < 0)
    throw std::invalid_argument("config: negative cadence");
}

std::string RunConfig::to_json() const {
  Json j;
  j["preset"] = preset;
  j["frame_h"] = frame_h;
  j["frame_w"] = frame_w;
  j["input_t"] = input_t;
  j["gen_channels"] = gen_channels;
  j["gen_temporal_strides"] = gen_temporal_strides;
  j["noise_rate"] = noise_rate;
  j["noise_at_inference"] = noise_at_inference;
  j["disc_stage_blocks"] = disc_stage_blocks;
  j["disc_stage_channels"] = disc_stage_channels;
  j["variant"] = variant;
  j["batch_size"] = opt.batch_size;
  j["beta1"] = opt.beta1;
  j["beta2"] = opt.beta2;
  j["lr_phase1_g"] = opt.lr_phase1_g;
  j["lr_phase2_d"] = opt.lr_phase2_d;
  j["lr_phase3_g"] = opt.lr_phase3_g;
  j["lr_phase3_d"] = opt.lr_phase3_d;
  j["d_updates_per_g"] = opt.d_updates_per_g;
  j["weight_adv"] = weights.adv;
  j["weight_mae"] = weights.mae;
  j["weight_perceptual"] = weights.perceptual;
  j["phase1_epochs"] = phase1_epochs;
  j["phase2_epochs"] = phase2_epochs;
  j["phase3_epochs"] = phase3_epochs;
  j["phase1_steps"] = phase1_steps;
  j["phase2_steps"] = phase2_steps;
  j["phase3_steps"] = phase3_steps;
  j["seed"] = seed;
  j["augment"] = augment;
  j["backbone"] = backbone;
  j["backbone_weights"] = backbone_weights;
  j["backbone_seed"] = backbone_seed;
  j["sample_every"] = sample_every;
  j["ckpt_every"] = ckpt_every;
  j["sn_check_every"] = sn_check_every;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c = j.contains("preset") ? by_name(j["preset"].get<std::string>())
                                     : RunConfig{};
  auto opt_get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  opt_get("frame_h", c.frame_h);
  opt_get("frame_w", c.frame_w);
  opt_get("input_t", c.input_t);
  opt_get("gen_channels", c.gen_channels);
  opt_get("gen_temporal_strides", c.gen_temporal_strides);
  opt_get("noise_rate", c.noise_rate);
  opt_get("noise_at_inference", c.noise_at_inference);
  opt_get("disc_stage_blocks", c.disc_stage_blocks);
  opt_get("disc_stage_channels", c.disc_stage_channels);
  opt_get("variant", c.variant);
  opt_get("batch_size", c.opt.batch_size);
  opt_get("beta1", c.opt.beta1);
  opt_get("beta2", c.opt.beta2);
  opt_get("lr_phase1_g", c.opt.lr_phase1_g);
  opt_get("lr_phase2_d", c.opt.lr_phase2_d);
  opt_get("lr_phase3_g", c.opt.lr_phase3_g);
  opt_get("lr_phase3_d", c.opt.lr_phase3_d);
  opt_get("d_updates_per_g", c.opt.d_updates_per_g);
  opt_get("weight_adv", c.weights.adv);
  opt_get("weight_mae", c.weights.mae);
  opt_get("weight_perceptual", c.weights.perceptual);
  opt_get("phase1_epochs", c.phase1_epochs);
  opt_get("phase2_epochs", c.phase2_epochs);
  opt_get("phase3_epochs", c.phase3_epochs);
  opt_get("phase1_steps", c.phase1_steps);
  opt_get("phase2_steps", c.phase2_steps);
  opt_get("phase3_steps", c.phase3_steps);
  opt_get("seed", c.seed);
  opt_get("augment", c.augment);
  opt_get("backbone", c.backbone);
  opt_get("backbone_weights", c.backbone_weights);
  opt_get("backbone_seed", c.backbone_seed);
  opt_get("sample_every", c.sample_every);
  opt_get("ckpt_every", c.ckpt_every);
  opt_get("sn_check_every", c.sn_check_every);
  return c;
}

RunConfig RunConfig::desk() {
  RunConfig c;
  c.preset = "desk";
  c.frame_h = 64;
  c.frame_w = 80;
  c.gen_channels = {8, 16, 32, 64};
  c.disc_stage_blocks = {1, 2, 2, 2, 2};
  c.disc_stage_channels = {8, 16, 32, 64, 128};
  c.opt.batch_size = 4;
  c.phase1_steps = 320;
  c.phase2_steps = 32;
  c.phase3_steps = 24;
  c.sample_every = 0;
  c.ckpt_every = 0;
  c.sn_check_every = 16;
  return c;
}

RunConfig RunConfig::paper() {
  RunConfig c;
  c.preset = "paper";
  c.frame_h = 128;
  c.frame_w = 160;
  c.gen_channels = {64, 128, 256, 512};
  c.disc_stage_blocks = {1, 2, 2, 2, 2};
  c.disc_stage_channels = {64, 128, 512, 1024, 2048};
  c.opt.batch_size = 8;
  c.phase1_epochs = 50.0;
  c.phase2_epochs = 2.0;
  c.phase3_epochs = 20.0;
  c.sample_every = 1000;
  c.ckpt_every = 5000;
  c.sn_check_every = 200;
  return c;
}

RunConfig RunConfig::by_name(const std::string& preset) {
  if (preset == "desk") return desk();
  if (preset == "paper") return paper();
  if (preset == "custom") {
    RunConfig c;
    c.preset = "custom";
    return c;
  }
  throw std::invalid_argument("unknown preset '" + preset + "' (desk | paper)");
}

}  // namespace vidpred
