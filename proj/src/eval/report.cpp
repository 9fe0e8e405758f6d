#include "vidpred/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "vidpred/io/image.hpp"

namespace vidpred::eval {
namespace {

std::string fmt(double v, int prec) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  return out;
}

}  // namespace

MotionReport motion_binned_report(const std::vector<EvalRecord>& records,
                                  double bin_width, int min_count) {
  if (records.empty())
    throw std::invalid_argument("motion_binned_report: no records");
  if (bin_width <= 0.0)
    throw std::invalid_argument("motion_binned_report: bin width must be > 0");
  double max_motion = 0.0;
  for (const auto& r : records) max_motion = std::max(max_motion, r.motion);
  const auto n_bins =
      static_cast<size_t>(std::floor(max_motion / bin_width)) + 1;

  std::map<std::string, std::vector<std::vector<double>>> grouped;
  for (const auto& r : records) {
    auto& bins = grouped[r.method];
    if (bins.empty()) bins.resize(n_bins);
    auto b = static_cast<size_t>(std::floor(r.motion / bin_width));
    if (b >= n_bins) b = n_bins - 1;
    bins[b].push_back(r.pdist);
  }

  MotionReport rep;
  rep.bin_width = bin_width;
  for (auto& [method, bins] : grouped) {
    MethodBins mb;
    mb.method = method;
    for (size_t b = 0; b < n_bins; ++b) {
      BinStat s;
      s.lo = static_cast<double>(b) * bin_width;
      s.hi = s.lo + bin_width;
      auto& v = bins[b];
      s.count = static_cast<int>(v.size());
      if (!v.empty()) {
        std::sort(v.begin(), v.end());
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / static_cast<double>(v.size());
        s.median = quantile(v, 0.5);
        s.q1 = quantile(v, 0.25);
        s.q3 = quantile(v, 0.75);
        rep.truncated_at = std::max(rep.truncated_at, s.hi);
      }
      s.flagged = s.count < min_count;
      mb.bins.push_back(s);
    }
    rep.methods.push_back(std::move(mb));
  }
  return rep;
}

MultiStepResult multi_step_eval(Generator& model, const data::ClipDataset& data,
                                int n_steps, const PerceptualBackbone& backbone,
                                RngStream* noise_rng) {
  if (n_steps < 1)
    throw std::invalid_argument("multi_step_eval: n_steps must be >= 1");
  MultiStepResult res;
  for (size_t i = 0; i < data.size(); ++i) {
    data::ClipSample sample;
    try {
      sample = data.get(i);
    } catch (const std::exception&) {
      ++res.skipped;
      continue;
    }
    if (sample.target.length() < n_steps) {
      ++res.skipped;
      continue;
    }
    const std::string sid =
        sample.input.source_id + "@" + std::to_string(sample.input.start_index);
    data::FrameSequence pred_seq;
    pred_seq.frames = model.rollout(sample.input.frames, n_steps, noise_rng);
    const data::FrameSequence baseline = copy_last_frame(sample.input, n_steps);
    const double motion =
        perceptual_distance(baseline.frame(0), sample.target.frame(0), backbone);
    for (int k = 1; k <= n_steps; ++k) {
      const Tensor target = sample.target.frame(k - 1);
      const Tensor pred = pred_seq.frame(k - 1);
      const Tensor base = baseline.frame(k - 1);
      res.records.push_back({"model", sid, k, ssim(pred, target),
                             perceptual_distance(pred, target, backbone), motion});
      res.records.push_back({"copy-last", sid, k, ssim(base, target),
                             perceptual_distance(base, target, backbone), motion});
      if (k == n_steps)
        res.last_step_pdist.push_back(res.records[res.records.size() - 2].pdist);
    }
  }
  // per-step means per method
  std::map<std::string, StepSeries> series;
  std::map<std::string, std::vector<int>> counts;
  for (const auto& r : res.records) {
    auto& s = series[r.method];
    if (s.method.empty()) {
      s.method = r.method;
      s.ssim.assign(static_cast<size_t>(n_steps), 0.0);
      s.pdist.assign(static_cast<size_t>(n_steps), 0.0);
      counts[r.method].assign(static_cast<size_t>(n_steps), 0);
    }
    const auto k = static_cast<size_t>(r.step - 1);
    s.ssim[k] += r.ssim;
    s.pdist[k] += r.pdist;
    counts[r.method][k] += 1;
  }
  for (auto& [method, s] : series) {
    for (size_t k = 0; k < s.ssim.size(); ++k) {
      const int n = counts[method][k];
      if (n > 0) {
        s.ssim[k] /= n;
        s.pdist[k] /= n;
      }
    }
    res.series.push_back(std::move(s));
  }
  return res;
}

std::vector<MethodScore> summarize(const std::vector<EvalRecord>& records,
                                   int step) {
  std::map<std::string, std::pair<double, double>> acc;
  std::map<std::string, int> n;
  for (const auto& r : records)
    if (r.step == step) {
      acc[r.method].first += r.ssim;
      acc[r.method].second += r.pdist;
      n[r.method] += 1;
    }
  std::vector<MethodScore> rows;
  for (const auto& [method, sums] : acc) {
    MethodScore row;
    row.method = method;
    row.ssim = sums.first / n[method];
    row.lpips100 = 100.0 * sums.second / n[method];
    rows.push_back(row);
  }
  return rows;
}

std::string render_table1(const std::vector<MethodScore>& rows) {
  size_t name_w = 6;
  for (const auto& r : rows) name_w = std::max(name_w, r.method.size());
  std::string out = "Method";
  out += std::string(name_w - 6, ' ');
  out += "  SSIM   LPIPS x100\n";
  for (const auto& r : rows) {
    out += r.method + std::string(name_w - r.method.size(), ' ');
    out += "  " + fmt(r.ssim, 3) + "  " + fmt(r.lpips100, 2) + "\n";
  }
  return out;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EvalRecord>& records) {
  auto out = open_out(path);
  out << "method,sample_id,step,ssim,pdist,motion\n";
  for (const auto& r : records)
    out << r.method << "," << r.sample_id << "," << r.step << ","
        << fmt(r.ssim, 6) << "," << fmt(r.pdist, 6) << "," << fmt(r.motion, 6)
        << "\n";
}

void write_table1_csv(const std::string& path,
                      const std::vector<MethodScore>& rows) {
  auto out = open_out(path);
  out << "method,ssim,lpips_x100\n";
  for (const auto& r : rows)
    out << r.method << "," << fmt(r.ssim, 3) << "," << fmt(r.lpips100, 2) << "\n";
}

void write_fig4_csv(const std::string& path, const MotionReport& report) {
  auto out = open_out(path);
  out << "method,bin_lo,bin_hi,count,mean,median,q1,q3,flag\n";
  for (const auto& mb : report.methods) {
    bool past_data = false;
    for (const auto& b : mb.bins) {
      if (b.lo >= report.truncated_at && !past_data) {
        out << mb.method << "," << fmt(b.lo, 4) << ",,,,,,,truncated\n";
        past_data = true;
        break;
      }
      out << mb.method << "," << fmt(b.lo, 4) << "," << fmt(b.hi, 4) << ","
          << b.count << "," << fmt(b.mean, 6) << "," << fmt(b.median, 6) << ","
          << fmt(b.q1, 6) << "," << fmt(b.q3, 6) << ","
          << (b.flagged ? "low_count" : "") << "\n";
    }
  }
}

void write_fig5_csv(const std::string& path,
                    const std::vector<StepSeries>& series) {
  auto out = open_out(path);
  out << "method,step,ssim,pdist\n";
  for (const auto& s : series)
    for (size_t k = 0; k < s.ssim.size(); ++k)
      out << s.method << "," << (k + 1) << "," << fmt(s.ssim[k], 6) << ","
          << fmt(s.pdist[k], 6) << "\n";
}

namespace {

void draw_line(Tensor& img, double x0, double y0, double x1, double y1,
               const double rgb[3]) {
  const int64_t h = img.dim(1), w = img.dim(2);
  const int steps =
      std::max(2, static_cast<int>(std::ceil(std::hypot(x1 - x0, y1 - y0))) * 2);
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const auto x = static_cast<int64_t>(std::lround(x0 + t * (x1 - x0)));
    const auto y = static_cast<int64_t>(std::lround(y0 + t * (y1 - y0)));
    if (x < 0 || x >= w || y < 0 || y >= h) continue;
    for (int64_t c = 0; c < 3; ++c) img[(c * h + y) * w + x] = rgb[c];
  }
}

constexpr double kPalette[4][3] = {
    {0.85, 0.25, 0.2}, {0.2, 0.4, 0.85}, {0.15, 0.65, 0.3}, {0.6, 0.3, 0.7}};

}  // namespace

void plot_step_curves_png(const std::string& path,
                          const std::vector<StepSeries>& series,
                          bool use_pdist) {
  const int64_t H = 240, W = 360, m = 24;
  Tensor img({3, H, W}, 1.0);
  double vmax = 1e-12, vmin = 0.0;
  size_t n_steps = 0;
  for (const auto& s : series) {
    const auto& v = use_pdist ? s.pdist : s.ssim;
    n_steps = std::max(n_steps, v.size());
    for (double x : v) vmax = std::max(vmax, x);
  }
  if (!use_pdist) vmax = 1.0;
  const double black[3] = {0.1, 0.1, 0.1};
  draw_line(img, m, H - m, W - m, H - m, black);
  draw_line(img, m, m, m, H - m, black);
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& v = use_pdist ? series[si].pdist : series[si].ssim;
    const double* color = kPalette[si % 4];
    for (size_t k = 0; k + 1 < v.size(); ++k) {
      auto px = [&](size_t i) {
        return m + static_cast<double>(i) / std::max<size_t>(1, n_steps - 1) *
                       (W - 2.0 * m);
      };
      auto py = [&](double val) {
        return (H - m) - (val - vmin) / (vmax - vmin) * (H - 2.0 * m);
      };
      draw_line(img, px(k), py(v[k]), px(k + 1), py(v[k + 1]), color);
    }
  }
  io::save_image_rgb(path, img);
}

void plot_histogram_png(const std::string& path,
                        const std::vector<double>& values, int n_bins) {
  const int64_t H = 240, W = 360, m = 24;
  Tensor img({3, H, W}, 1.0);
  const double black[3] = {0.1, 0.1, 0.1};
  draw_line(img, m, H - m, W - m, H - m, black);
  draw_line(img, m, m, m, H - m, black);
  if (!values.empty() && n_bins > 0) {
    double vmax = *std::max_element(values.begin(), values.end());
    if (vmax <= 0.0) vmax = 1.0;
    std::vector<int> bins(static_cast<size_t>(n_bins), 0);
    for (double v : values) {
      auto b = static_cast<size_t>(std::floor(v / vmax * n_bins));
      if (b >= static_cast<size_t>(n_bins)) b = static_cast<size_t>(n_bins) - 1;
      bins[b] += 1;
    }
    const int peak = *std::max_element(bins.begin(), bins.end());
    const double bw = (W - 2.0 * m) / n_bins;
    for (int b = 0; b < n_bins; ++b) {
      const double frac = static_cast<double>(bins[static_cast<size_t>(b)]) / peak;
      const double x0 = m + b * bw + 1, x1 = m + (b + 1) * bw - 1;
      const double y1 = H - m, y0 = y1 - frac * (H - 2.0 * m);
      for (double x = x0; x <= x1; x += 0.5)
        draw_line(img, x, y0, x, y1, kPalette[1]);
    }
  }
  io::save_image_rgb(path, img);
}

}  // namespace vidpred::eval
