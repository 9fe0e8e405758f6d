#include "vidpred/train/trainer.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "vidpred/io/container.hpp"

namespace vidpred::train {

using nlohmann::json;

void OptimizerSettings::validate() const {
  if (batch_size < 1) throw std::invalid_argument("trainer: batch_size >= 1");
  for (double lr : {lr_phase1_g, lr_phase2_d, lr_phase3_g, lr_phase3_d})
    if (lr <= 0.0) throw std::invalid_argument("trainer: learning rates must be > 0");
  if (d_updates_per_g < 1)
    throw std::invalid_argument("trainer: d_updates_per_g >= 1");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("trainer: betas must lie in [0,1)");
}

void PhaseSchedule::validate() const {
  if (phase1_steps < 0 || phase2_steps < 0 || phase3_steps < 0)
    throw std::invalid_argument("trainer: phase step counts must be >= 0");
  if (!variant_adversarial(variant) && (phase2_steps > 0 || phase3_steps > 0))
    throw std::invalid_argument(variant_name(variant) +
                                " skips phases 2-3; set their steps to 0");
}

Trainer::Trainer(Generator& gen, Discriminator* disc,
                 const PerceptualBackbone* backbone,
                 const data::ClipDataset& data, const TrainerConfig& cfg)
    : gen_(gen), disc_(disc), backbone_(backbone), data_(data), cfg_(cfg),
      data_rng_(cfg.seed, /*stream=*/3), noise_rng_(cfg.seed, /*stream=*/4) {
  cfg_.opt.validate();
  cfg_.schedule.validate();
  if (variant_adversarial(cfg_.schedule.variant) && disc_ == nullptr)
    throw std::invalid_argument(variant_name(cfg_.schedule.variant) +
                                " needs a discriminator");
  if (variant_perceptual(cfg_.schedule.variant) && backbone_ == nullptr)
    throw std::invalid_argument(variant_name(cfg_.schedule.variant) +
                                " needs a perceptual backbone");
  if (data_.size() == 0) throw std::invalid_argument("trainer: empty dataset");
  nn::AdamConfig ac;
  ac.beta1 = cfg_.opt.beta1;
  ac.beta2 = cfg_.opt.beta2;
  opt_g_ = nn::Adam(ac);
  opt_d_ = nn::Adam(ac);
  if (!cfg_.log_path.empty()) {
    std::ofstream out(cfg_.log_path, std::ios::trunc);  // start the log fresh
    if (!out) throw std::runtime_error("trainer: cannot write " + cfg_.log_path);
  }
}

Trainer::Batch Trainer::next_batch() {
  const int n = cfg_.opt.batch_size;
  Tensor clip, target;
  for (int i = 0; i < n; ++i) {
    data::ClipSample s = data_.get(
        static_cast<size_t>(data_rng_.uniform_int(static_cast<int64_t>(data_.size()))));
    if (cfg_.augment) data::augment_flip(s, data_rng_);
    if (s.input.length() != gen_.config().input_t || s.target.length() < 1)
      throw std::runtime_error("trainer: sample shape does not fit the generator");
    const int64_t h = s.input.frames.dim(2), w = s.input.frames.dim(3);
    const int64_t t = s.input.length();
    if (i == 0) {
      clip = Tensor({n, 3, t, h, w});
      target = Tensor({n, 3, 1, h, w});
    }
    const int64_t in_count = 3 * t * h * w;
    std::copy(s.input.frames.data(), s.input.frames.data() + in_count,
              clip.data() + static_cast<int64_t>(i) * in_count);
    // first target frame only; training predicts one step
    const int64_t plane = h * w;
    const int64_t tl = s.target.length();
    for (int64_t c = 0; c < 3; ++c)
      std::copy(s.target.frames.data() + c * tl * plane,
                s.target.frames.data() + c * tl * plane + plane,
                target.data() + (static_cast<int64_t>(i) * 3 + c) * plane);
  }
  return {ag::constant(std::move(clip)), ag::constant(std::move(target))};
}

void Trainer::guard_finite(double v, const char* what) {
  if (std::isfinite(v)) return;
  std::string dump;
  for (size_t i = log_.size() >= 5 ? log_.size() - 5 : 0; i < log_.size(); ++i)
    dump += " [" + log_[i].role + " phase " + std::to_string(log_[i].phase) +
            " step " + std::to_string(log_[i].step) + "]";
  throw DivergenceError(std::string("training diverged: non-finite ") + what +
                        "; recent updates:" + dump);
}

void Trainer::append_log(const StepLog& entry) {
  log_.push_back(entry);
  if (cfg_.log_path.empty()) return;
  json j{{"phase", entry.phase}, {"step", entry.step}, {"role", entry.role}};
  if (entry.role == "G") {
    j["total"] = entry.g.scalar;
    j["mae"] = entry.g.mae;
    if (entry.g.has_perceptual) j["perceptual"] = entry.g.perceptual;
    if (entry.g.has_adv) j["adv"] = entry.g.adv;
  } else {
    j["d_loss"] = entry.d_loss;
  }
  std::ofstream out(cfg_.log_path, std::ios::app);
  out << j.dump() << "\n";
}

void Trainer::g_update(int phase, double lr, bool adversarial) {
  Batch b = next_batch();
  ag::Var pred = gen_.forward(b.clip, &noise_rng_, /*training=*/true);
  ag::Var fake_logits;
  if (adversarial && disc_ != nullptr)
    fake_logits = disc_->forward(b.clip, pred, /*update_u=*/false);
  ObjectiveResult obj =
      generator_objective(pred, b.target, fake_logits, cfg_.weights, backbone_,
                          cfg_.schedule.variant);
  guard_finite(obj.value.scalar, "generator loss");
  ag::backward(obj.total);
  auto params = gen_.params();
  opt_g_.set_lr(lr);
  opt_g_.step(params);

  StepLog entry;
  entry.phase = phase;
  entry.step = ++done_[phase];
  entry.role = "G";
  entry.g = obj.value;
  append_log(entry);
}

void Trainer::d_update(int phase, double lr) {
  Batch b = next_batch();
  // fake frames from the frozen generator; graph detached via constant copy
  ag::Var pred = gen_.forward(b.clip, &noise_rng_, /*training=*/false);
  ag::Var fake = ag::constant(pred->value);
  ag::Var real_logits = disc_->forward(b.clip, b.target, /*update_u=*/true);
  ag::Var fake_logits = disc_->forward(b.clip, fake, /*update_u=*/true);
  ag::Var loss = hinge_loss_d(real_logits, fake_logits);
  guard_finite(ag::scalar(loss), "discriminator loss");
  ag::backward(loss);
  auto params = disc_->params();
  opt_d_.set_lr(lr);
  opt_d_.step(params);

  StepLog entry;
  entry.phase = phase;
  entry.step = ++done_[phase];
  entry.role = "D";
  entry.d_loss = ag::scalar(loss);
  append_log(entry);
  if (cfg_.sn_check_every > 0 && entry.step % cfg_.sn_check_every == 0)
    sn_audit();
}

void Trainer::sn_audit() {
  if (disc_ == nullptr || !disc_->config().spectral_norm) return;
  const auto before = disc_->sigma_estimates();
  disc_->power_iterate(10);
  const auto after = disc_->sigma_estimates();
  for (size_t i = 0; i < before.size(); ++i) {
    const double rel = std::fabs(after[i] - before[i]) / std::max(after[i], 1e-12);
    if (rel > 1e-2)
      std::cerr << "trainer: spectral estimate for conv " << i
                << " moved " << rel << " under extra power iterations\n";
  }
}

void Trainer::train_phase1(int64_t steps) {
  for (int64_t i = 0; i < steps; ++i)
    g_update(1, cfg_.opt.lr_phase1_g, /*adversarial=*/false);
}

void Trainer::train_phase2(int64_t steps) {
  if (steps > 0 && disc_ == nullptr)
    throw std::invalid_argument("trainer: phase 2 needs a discriminator");
  for (int64_t i = 0; i < steps; ++i) d_update(2, cfg_.opt.lr_phase2_d);
}

void Trainer::train_phase3(int64_t g_steps) {
  if (g_steps > 0 && disc_ == nullptr)
    throw std::invalid_argument("trainer: phase 3 needs a discriminator");
  for (int64_t i = 0; i < g_steps; ++i) {
    for (int k = 0; k < cfg_.opt.d_updates_per_g; ++k)
      d_update(3, cfg_.opt.lr_phase3_d);
    g_update(3, cfg_.opt.lr_phase3_g, /*adversarial=*/true);
  }
}

void Trainer::run() {
  train_phase1(cfg_.schedule.phase1_steps);
  if (variant_adversarial(cfg_.schedule.variant)) {
    train_phase2(cfg_.schedule.phase2_steps);
    train_phase3(cfg_.schedule.phase3_steps);
  }
}

int64_t Trainer::phase_steps(int phase) const {
  if (phase < 1 || phase > 3) throw std::out_of_range("trainer: phase");
  return done_[phase];
}

namespace {

void store_params(io::Container& c, const std::string& prefix,
                  std::vector<nn::ParamRef> params,
                  std::vector<nn::BufferRef> bufs) {
  for (const auto& p : params) c.arrays[prefix + p.name] = p.var->value;
  for (const auto& b : bufs) c.arrays[prefix + b.name] = *b.tensor;
}

void load_params(const io::Container& c, const std::string& prefix,
                 std::vector<nn::ParamRef> params,
                 std::vector<nn::BufferRef> bufs) {
  for (auto& p : params)
    p.var->value = c.expect(prefix + p.name, p.var->value.shape());
  for (auto& b : bufs)
    *b.tensor = c.expect(prefix + b.name, b.tensor->shape());
}

void store_moments(io::Container& c, const std::string& prefix, nn::Adam& opt) {
  for (const auto& [name, t] : opt.m()) c.arrays[prefix + "/m/" + name] = t;
  for (const auto& [name, t] : opt.v()) c.arrays[prefix + "/v/" + name] = t;
}

void load_moments(const io::Container& c, const std::string& prefix,
                  nn::Adam& opt) {
  opt.m().clear();
  opt.v().clear();
  const std::string mp = prefix + "/m/", vp = prefix + "/v/";
  for (const auto& [name, t] : c.arrays) {
    if (name.rfind(mp, 0) == 0) opt.m()[name.substr(mp.size())] = t;
    if (name.rfind(vp, 0) == 0) opt.v()[name.substr(vp.size())] = t;
  }
}

}  // namespace

void Trainer::checkpoint_save(const std::string& path) {
  io::Container c;
  store_params(c, "", gen_.params(), gen_.buffers());
  if (disc_ != nullptr) store_params(c, "", disc_->params(), disc_->buffers());
  store_moments(c, "opt_g", opt_g_);
  store_moments(c, "opt_d", opt_d_);
  json meta;
  meta["format"] = "vidpred-checkpoint";
  meta["variant"] = variant_name(cfg_.schedule.variant);
  meta["phase_steps"] = {done_[1], done_[2], done_[3]};
  meta["opt_t"] = {opt_g_.t(), opt_d_.t()};
  meta["rng_data"] = data_rng_.state();
  meta["rng_noise"] = noise_rng_.state();
  meta["gen_channels"] = gen_.config().channels;
  c.meta = meta.dump();
  c.save(path);
}

void Trainer::checkpoint_load(const std::string& path) {
  io::Container c = io::Container::load(path);
  json meta = json::parse(c.meta);
  if (meta.value("format", "") != "vidpred-checkpoint")
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint");
  load_params(c, "", gen_.params(), gen_.buffers());
  if (disc_ != nullptr) load_params(c, "", disc_->params(), disc_->buffers());
  load_moments(c, "opt_g", opt_g_);
  load_moments(c, "opt_d", opt_d_);
  const auto steps = meta.at("phase_steps");
  done_[1] = steps.at(0).get<int64_t>();
  done_[2] = steps.at(1).get<int64_t>();
  done_[3] = steps.at(2).get<int64_t>();
  const auto ts = meta.at("opt_t");
  opt_g_.set_t(ts.at(0).get<int64_t>());
  opt_d_.set_t(ts.at(1).get<int64_t>());
  data_rng_.set_state(meta.at("rng_data").get<std::string>());
  noise_rng_.set_state(meta.at("rng_noise").get<std::string>());
}

std::string checkpoint_meta(const std::string& path) {
  io::Container c = io::Container::load(path);
  json meta = json::parse(c.meta, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded() || meta.value("format", "") != "vidpred-checkpoint")
    throw CheckpointMismatch("checkpoint: " + path + " is not a checkpoint");
  return c.meta;
}

void load_generator(const std::string& path, Generator& gen) {
  io::Container c = io::Container::load(path);
  json meta = json::parse(c.meta, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded() || meta.value("format", "") != "vidpred-checkpoint")
    throw CheckpointMismatch("checkpoint: " + path + " is not a checkpoint");
  const auto stored = meta.at("gen_channels").get<std::vector<int64_t>>();
  if (stored != gen.config().channels)
    throw CheckpointMismatch("checkpoint: generator channels " +
                             shape_str(stored) + " do not match the config's " +
                             shape_str(gen.config().channels));
  try {
    load_params(c, "", gen.params(), gen.buffers());
  } catch (const std::exception& e) {
    throw CheckpointMismatch(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace vidpred::train
