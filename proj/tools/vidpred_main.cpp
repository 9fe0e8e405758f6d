#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vidpred/config.hpp"
#include "vidpred/data/synth.hpp"
#include "vidpred/eval/report.hpp"
#include "vidpred/io/image.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace vidpred;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitMismatch = 4;

void parse_size(const std::string& text, int64_t& h, int64_t& w) {
  const auto x = text.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= text.size())
    throw std::invalid_argument("--size expects HxW, e.g. 64x80");
  h = std::stoll(text.substr(0, x));
  w = std::stoll(text.substr(x + 1));
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Stack same-width strips vertically with a 2px white divider.
Tensor vstack(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("vstack: no rows");
  const int64_t w = rows[0].dim(2);
  int64_t h_total = -2;
  for (const auto& r : rows) {
    check_same_shape(r, Tensor({3, r.dim(1), w}), "vstack row");
    h_total += r.dim(1) + 2;
  }
  Tensor out({3, h_total, w});
  out.fill(1.0);
  int64_t y = 0;
  for (const auto& r : rows) {
    const int64_t h = r.dim(1);
    for (int64_t c = 0; c < 3; ++c)
      std::copy(r.data() + c * h * w, r.data() + (c + 1) * h * w,
                out.data() + (c * h_total + y) * w);
    y += h + 2;
  }
  return out;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

PerceptualBackbone make_backbone(const RunConfig& cfg) {
  if (cfg.backbone == "identity") return PerceptualBackbone::identity();
  if (cfg.backbone == "stub") return PerceptualBackbone::random_stub(cfg.backbone_seed);
  return PerceptualBackbone::load(cfg.backbone_weights);
}

struct ConfigFlags {
  std::string preset = "desk";
  std::string config_file;
  CLI::App* cmd = nullptr;

  void attach(CLI::App* app) {
    cmd = app;
    app->add_option("--preset", preset, "settings preset: desk | paper");
    app->add_option("--config", config_file, "JSON config file (overrides the preset)");
  }

  RunConfig resolve() const {
    if (!config_file.empty()) {
      std::ifstream in(config_file, std::ios::binary);
      if (!in) throw std::invalid_argument("cannot read config " + config_file);
      std::string text((std::istreambuf_iterator<char>(in)), {});
      return RunConfig::from_json(text);
    }
    return RunConfig::by_name(preset);
  }
};

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  std::string out;
  std::string size = "64x80";
  data::SynthSpec spec;
  uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  data::SynthSpec spec = a.spec;
  parse_size(a.size, spec.height, spec.width);
  spec.texture_seed = a.seed;
  spec.validate();

  RngStream rng(a.seed, /*stream=*/3);
  auto seqs = data::synth_generate(spec, rng);
  data::synth_write(spec, seqs, a.out);

  ordered_json echo;
  echo["command"] = "synth";
  echo["height"] = spec.height;
  echo["width"] = spec.width;
  echo["pan_velocity"] = spec.pan_velocity;
  echo["n_sprites"] = spec.n_sprites;
  echo["sprite_velocity_min"] = spec.sprite_velocity_min;
  echo["sprite_velocity_max"] = spec.sprite_velocity_max;
  echo["length"] = spec.length;
  echo["n_sequences"] = spec.n_sequences;
  echo["seed"] = a.seed;
  write_text(fs::path(a.out) / "config.echo", echo.dump(2) + "\n");
  std::cout << "wrote " << spec.n_sequences << " sequences of " << spec.length
            << " frames to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
  ConfigFlags cfg;
  std::string data_dir;
  std::string out;
  std::string variant;
  int64_t seed = 0;
  int batch = 0;
  int64_t steps1 = -2, steps2 = -2, steps3 = -2;  // -2: flag absent
  int64_t sample_every = -1, ckpt_every = -1;
  std::string backbone, backbone_weights;
};

void emit_samples(const fs::path& dir, Generator& gen, const data::ClipDataset& data) {
  fs::create_directories(dir);
  const data::ClipSample s = data.get(0);
  const Tensor pred = gen.predict(s.input.frames, /*noise_rng=*/nullptr);
  const Tensor gt = s.target.frame(0);
  const Tensor last = s.input.frame(s.input.length() - 1);
  io::save_image_rgb((dir / "gt.png").string(), gt);
  io::save_image_rgb((dir / "pred.png").string(), pred);
  io::save_image_rgb((dir / "strip.png").string(),
                     io::hstack_frames({last, gt, pred}));
}

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = a.cfg.resolve();
  if (!a.variant.empty()) cfg.variant = a.variant;
  if (a.cfg.cmd->count("--seed") > 0) cfg.seed = static_cast<uint64_t>(a.seed);
  if (a.batch > 0) cfg.opt.batch_size = a.batch;
  if (a.steps1 != -2) cfg.phase1_steps = a.steps1;
  if (a.steps2 != -2) cfg.phase2_steps = a.steps2;
  if (a.steps3 != -2) cfg.phase3_steps = a.steps3;
  if (a.sample_every >= 0) cfg.sample_every = a.sample_every;
  if (a.ckpt_every >= 0) cfg.ckpt_every = a.ckpt_every;
  if (!a.backbone.empty()) cfg.backbone = a.backbone;
  if (!a.backbone_weights.empty()) cfg.backbone_weights = a.backbone_weights;
  cfg.validate();

  if (!fs::is_directory(a.data_dir))
    throw std::invalid_argument("dataset directory not found: " + a.data_dir);
  auto index = data::ingest(a.data_dir, data::DatasetKind::kTrain);
  data::DirDataset data(index, cfg.frame_h, cfg.frame_w);

  const fs::path out(a.out);
  fs::create_directories(out / "ckpt");
  write_text(out / "config.echo", cfg.to_json());

  Generator gen(cfg.generator(), cfg.seed);
  std::unique_ptr<Discriminator> disc;
  const Variant variant = variant_parse(cfg.variant);
  if (variant_adversarial(variant))
    disc = std::make_unique<Discriminator>(cfg.discriminator(), cfg.seed);
  std::unique_ptr<PerceptualBackbone> backbone;
  if (variant_perceptual(variant))
    backbone = std::make_unique<PerceptualBackbone>(make_backbone(cfg));

  train::TrainerConfig tc;
  tc.opt = cfg.opt;
  tc.schedule = cfg.schedule(static_cast<int64_t>(data.size()));
  tc.weights = cfg.weights;
  tc.seed = cfg.seed;
  tc.augment = cfg.augment;
  tc.log_path = (out / "log.jsonl").string();
  tc.sn_check_every = cfg.sn_check_every;
  train::Trainer trainer(gen, disc.get(), backbone.get(), data, tc);

  int64_t global = 0;
  int64_t cadence = 0;
  for (int64_t every : {cfg.sample_every, cfg.ckpt_every})
    if (every > 0) cadence = cadence > 0 ? std::min(cadence, every) : every;

  auto run_phase = [&](int phase, int64_t steps, int64_t updates_per_step) {
    if (steps <= 0) return;
    std::cout << "phase " << phase << ": " << steps << " steps\n";
    int64_t done = 0;
    while (done < steps) {
      const int64_t chunk = cadence > 0 ? std::min(cadence, steps - done) : steps;
      if (phase == 1) trainer.train_phase1(chunk);
      else if (phase == 2) trainer.train_phase2(chunk);
      else trainer.train_phase3(chunk);
      done += chunk;
      const int64_t prev = global;
      global += chunk * updates_per_step;
      if (!trainer.log().empty()) {
        const auto& e = trainer.log().back();
        std::cout << "  " << e.role << " step " << e.step << ": "
                  << (e.role == "G" ? e.g.scalar : e.d_loss) << "\n";
      }
      auto crossed = [&](int64_t every) {
        return every > 0 && global / every > prev / every;
      };
      if (crossed(cfg.ckpt_every))
        trainer.checkpoint_save((out / "ckpt" / (std::to_string(global) + ".bin")).string());
      if (crossed(cfg.sample_every))
        emit_samples(out / "samples" / std::to_string(global), gen, data);
    }
  };

  run_phase(1, tc.schedule.phase1_steps, 1);
  run_phase(2, tc.schedule.phase2_steps, 1);
  run_phase(3, tc.schedule.phase3_steps, cfg.opt.d_updates_per_g + 1);

  trainer.checkpoint_save((out / "ckpt" / (std::to_string(global) + ".bin")).string());
  emit_samples(out / "samples" / std::to_string(global), gen, data);
  std::cout << "run complete: " << out.string() << "\n";
  return 0;
}

// -------------------------------------------------------------- predict ----

struct PredictArgs {
  ConfigFlags cfg;
  std::string checkpoint;
  std::string clip_dir;
  std::string out;
  int steps = 10;
  int64_t seed = 0;
  bool no_noise = false;
};

int cmd_predict(const PredictArgs& a) {
  RunConfig cfg = a.cfg.resolve();
  if (a.cfg.cmd->count("--seed") > 0) cfg.seed = static_cast<uint64_t>(a.seed);
  if (a.steps < 1) throw std::invalid_argument("--steps must be >= 1");

  if (!fs::is_directory(a.clip_dir))
    throw std::invalid_argument("clip directory not found: " + a.clip_dir);
  const auto files = list_frames(a.clip_dir);
  const int64_t t = cfg.input_t;
  if (static_cast<int64_t>(files.size()) < t)
    throw std::invalid_argument("clip has " + std::to_string(files.size()) +
                                " frames; need at least " + std::to_string(t));

  std::vector<Tensor> frames;
  for (const auto& f : files)
    frames.push_back(data::preprocess(io::load_image_rgb(f.string()),
                                      cfg.frame_h, cfg.frame_w));
  Tensor clip({3, t, cfg.frame_h, cfg.frame_w});
  for (int64_t k = 0; k < t; ++k) {
    const Tensor& fr = frames[static_cast<size_t>(k)];
    const int64_t plane = cfg.frame_h * cfg.frame_w;
    for (int64_t c = 0; c < 3; ++c)
      std::copy(fr.data() + c * plane, fr.data() + (c + 1) * plane,
                clip.data() + (c * t + k) * plane);
  }

  Generator gen(cfg.generator(), cfg.seed);
  train::load_generator(a.checkpoint, gen);

  RngStream noise(cfg.seed, /*stream=*/4);
  const Tensor preds = gen.rollout(clip, a.steps, a.no_noise ? nullptr : &noise);

  const fs::path out(a.out);
  fs::create_directories(out);
  std::vector<Tensor> pred_row, gt_row;
  const int64_t plane = cfg.frame_h * cfg.frame_w;
  for (int k = 0; k < a.steps; ++k) {
    Tensor fr({3, cfg.frame_h, cfg.frame_w});
    for (int64_t c = 0; c < 3; ++c)
      std::copy(preds.data() + (c * a.steps + k) * plane,
                preds.data() + (c * a.steps + k + 1) * plane,
                fr.data() + c * plane);
    char name[32];
    std::snprintf(name, sizeof name, "pred_%02d.png", k + 1);
    io::save_image_rgb((out / name).string(), fr);
    pred_row.push_back(fr);
    const size_t gi = static_cast<size_t>(t) + static_cast<size_t>(k);
    gt_row.push_back(gi < files.size() ? frames[gi] : frames.back());
  }
  io::save_image_rgb((out / "strip.png").string(),
                     vstack({io::hstack_frames(gt_row), io::hstack_frames(pred_row)}));

  ordered_json echo;
  echo["command"] = "predict";
  echo["checkpoint"] = a.checkpoint;
  echo["clip"] = a.clip_dir;
  echo["steps"] = a.steps;
  echo["noise"] = !a.no_noise;
  echo["seed"] = cfg.seed;
  echo["frame_h"] = cfg.frame_h;
  echo["frame_w"] = cfg.frame_w;
  echo["gen_channels"] = cfg.gen_channels;
  write_text(out / "config.echo", echo.dump(2) + "\n");
  std::cout << "wrote " << a.steps << " frames + strip to " << out.string() << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
  ConfigFlags cfg;
  std::string checkpoint;
  std::string data_dir;
  std::string out;
  std::string backbone, weights;
  int multistep = 1;
  int64_t stride = 10;
  int64_t seed = 0;
  bool noise = false;
};

int cmd_eval(const EvalArgs& a) {
  RunConfig cfg = a.cfg.resolve();
  if (a.cfg.cmd->count("--seed") > 0) cfg.seed = static_cast<uint64_t>(a.seed);
  if (!a.backbone.empty()) cfg.backbone = a.backbone;
  if (!a.weights.empty()) cfg.backbone_weights = a.weights;
  if (a.multistep < 1) throw std::invalid_argument("--multistep must be >= 1");
  if (cfg.backbone == "pretrained" && cfg.backbone_weights.empty())
    throw std::invalid_argument("pretrained backbone needs --weights");

  if (!fs::is_directory(a.data_dir))
    throw std::invalid_argument("dataset directory not found: " + a.data_dir);
  const int64_t window = 9 + a.multistep;
  auto index = data::ingest(a.data_dir, data::DatasetKind::kEval, window, a.stride);
  data::DirDataset data(index, cfg.frame_h, cfg.frame_w, a.multistep);

  Generator gen(cfg.generator(), cfg.seed);
  train::load_generator(a.checkpoint, gen);
  PerceptualBackbone backbone = make_backbone(cfg);

  RngStream noise_rng(cfg.seed, /*stream=*/4);
  auto result = eval::multi_step_eval(gen, data, a.multistep, backbone,
                                      a.noise ? &noise_rng : nullptr);

  const fs::path out(a.out);
  fs::create_directories(out);
  eval::write_metrics_csv((out / "metrics.csv").string(), result.records);
  const auto rows = eval::summarize(result.records, /*step=*/1);
  eval::write_table1_csv((out / "table1.csv").string(), rows);
  const auto bins = eval::motion_binned_report(result.records);
  eval::write_fig4_csv((out / "fig4_bins.csv").string(), bins);
  eval::write_fig5_csv((out / "fig5_steps.csv").string(), result.series);
  eval::plot_step_curves_png((out / "fig5_ssim.png").string(), result.series, false);
  eval::plot_step_curves_png((out / "fig5_pdist.png").string(), result.series, true);
  eval::plot_histogram_png((out / "fig4_hist.png").string(), result.last_step_pdist);

  const std::string table = eval::render_table1(rows);
  write_text(out / "table1.txt", table);
  std::cout << table;
  if (result.skipped > 0)
    std::cout << "(" << result.skipped << " clips skipped: too short for "
              << a.multistep << " steps)\n";

  ordered_json echo = ordered_json::parse(cfg.to_json());
  echo["command"] = "eval";
  echo["checkpoint"] = a.checkpoint;
  echo["data"] = a.data_dir;
  echo["multistep"] = a.multistep;
  echo["stride"] = a.stride;
  echo["noise"] = a.noise;
  write_text(out / "config.echo", echo.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"next-frame video prediction: synthesis, training, prediction, evaluation"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "render a synthetic panning dataset");
  synth->add_option("--out", sa.out, "output dataset directory")->required();
  synth->add_option("--size", sa.size, "frame size HxW (default 64x80)");
  synth->add_option("--pan", sa.spec.pan_velocity, "horizontal pan velocity, px/frame");
  synth->add_option("--sequences", sa.spec.n_sequences, "number of sequences");
  synth->add_option("--length", sa.spec.length, "frames per sequence");
  synth->add_option("--sprites", sa.spec.n_sprites, "moving sprites per sequence");
  synth->add_option("--seed", sa.seed, "texture/sprite seed");
  synth->add_option("--prefix", sa.spec.seq_prefix, "sequence-id prefix (mix batches in one root)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "run the three-phase training schedule");
  ta.cfg.attach(train);
  train->add_option("--data", ta.data_dir, "frame-directory dataset root")->required();
  train->add_option("--out", ta.out, "run directory")->required();
  train->add_option("--variant", ta.variant, "GAN-VGG | G-VGG | GAN-MAE | G-MAE");
  train->add_option("--seed", ta.seed, "run seed");
  train->add_option("--batch-size", ta.batch, "minibatch size");
  train->add_option("--phase1-steps", ta.steps1, "override phase 1 G updates");
  train->add_option("--phase2-steps", ta.steps2, "override phase 2 D updates");
  train->add_option("--phase3-steps", ta.steps3, "override phase 3 G updates");
  train->add_option("--sample-every", ta.sample_every, "steps between sample strips");
  train->add_option("--ckpt-every", ta.ckpt_every, "steps between checkpoints");
  train->add_option("--backbone", ta.backbone, "stub | identity | pretrained");
  train->add_option("--weights", ta.backbone_weights, "pretrained backbone file");

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "recursively predict future frames");
  pa.cfg.attach(predict);
  predict->add_option("--checkpoint", pa.checkpoint, "training checkpoint")->required();
  predict->add_option("--clip", pa.clip_dir, "directory of input frames")->required();
  predict->add_option("--out", pa.out, "output directory")->required();
  predict->add_option("--steps", pa.steps, "prediction horizon");
  predict->add_option("--seed", pa.seed, "noise seed");
  predict->add_flag("--no-noise", pa.no_noise, "disable the stochastic units");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "score a checkpoint against the baseline");
  ea.cfg.attach(eval);
  eval->add_option("--checkpoint", ea.checkpoint, "training checkpoint")->required();
  eval->add_option("--data", ea.data_dir, "frame-directory dataset root")->required();
  eval->add_option("--out", ea.out, "report directory")->required();
  eval->add_option("--backbone", ea.backbone, "stub | identity | pretrained");
  eval->add_option("--weights", ea.weights, "pretrained backbone file");
  eval->add_option("--multistep", ea.multistep, "prediction horizon (default 1)");
  eval->add_option("--stride", ea.stride, "eval window stride");
  eval->add_option("--seed", ea.seed, "run seed");
  eval->add_flag("--noise", ea.noise, "sample the stochastic units");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(sa);
    if (train->parsed()) return cmd_train(ta);
    if (predict->parsed()) return cmd_predict(pa);
    return cmd_eval(ea);
  } catch (const train::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const train::CheckpointMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
