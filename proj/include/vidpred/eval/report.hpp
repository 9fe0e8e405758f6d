#pragma once

#include <string>
#include <vector>

#include "vidpred/data/dataset.hpp"
#include "vidpred/eval/metrics.hpp"
#include "vidpred/model/generator.hpp"

namespace vidpred::eval {

/// One (method, sample, horizon-step) metric tuple.
struct EvalRecord {
  std::string method;
  std::string sample_id;
  int step = 1;       // prediction horizon index, 1-based
  double ssim = 0.0;
  double pdist = 0.0;
  double motion = 0.0;  // Copy-Last-Frame distance of the sample
};

/// Table-1-style summary row.
struct MethodScore {
  std::string method;
  double ssim = 0.0;
  double lpips100 = 0.0;  // perceptual distance x100
};

/// Per-bin quartile stats of one method's perceptual distance.
struct BinStat {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  double mean = 0.0, median = 0.0, q1 = 0.0, q3 = 0.0;
  bool flagged = false;  // fewer than min_count samples
};

struct MethodBins {
  std::string method;
  std::vector<BinStat> bins;
};

struct MotionReport {
  double bin_width = 0.02;
  double truncated_at = 0.0;  // upper edge of the last populated bin
  std::vector<MethodBins> methods;
};

/// Mean metric per step (index 0 = step 1) for one method.
struct StepSeries {
  std::string method;
  std::vector<double> ssim;
  std::vector<double> pdist;
};

struct MultiStepResult {
  std::vector<EvalRecord> records;
  std::vector<StepSeries> series;
  std::vector<double> last_step_pdist;  // histogram source (model method)
  size_t skipped = 0;
};

/// Quartile breakdown of per-sample pdist against the motion score.
MotionReport motion_binned_report(const std::vector<EvalRecord>& records,
                                  double bin_width = 0.02, int min_count = 3);

/// Rolls the model n_steps ahead on every dataset clip (dataset targets must
/// cover n_steps frames) and scores each step; the Copy-Last-Frame baseline
/// is always evaluated alongside. Deterministic when noise is disabled.
MultiStepResult multi_step_eval(Generator& model, const data::ClipDataset& data,
                                int n_steps, const PerceptualBackbone& backbone,
                                RngStream* noise_rng = nullptr);

/// Mean scores per method at a given step (1 = next frame).
std::vector<MethodScore> summarize(const std::vector<EvalRecord>& records,
                                   int step = 1);

std::string render_table1(const std::vector<MethodScore>& rows);

void write_metrics_csv(const std::string& path,
                       const std::vector<EvalRecord>& records);
void write_table1_csv(const std::string& path,
                      const std::vector<MethodScore>& rows);
void write_fig4_csv(const std::string& path, const MotionReport& report);
void write_fig5_csv(const std::string& path,
                    const std::vector<StepSeries>& series);

/// Simple line plot (one curve per series) / histogram as PNG.
void plot_step_curves_png(const std::string& path,
                          const std::vector<StepSeries>& series,
                          bool use_pdist);
void plot_histogram_png(const std::string& path,
                        const std::vector<double>& values, int n_bins = 20);

}  // namespace vidpred::eval
