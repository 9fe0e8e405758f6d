#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vidpred/core/rng.hpp"
#include "vidpred/core/tensor.hpp"

namespace vidpred::data {

/// A clip of RGB frames in [0,1] — the currency between all modules.
struct FrameSequence {
  Tensor frames;  // (3, n, H, W)
  std::string source_id;
  int64_t start_index = 0;

  int64_t length() const { return frames.ndim() == 4 ? frames.dim(1) : 0; }
  Tensor frame(int64_t k) const;         // copy of frame k, (3,H,W)
  FrameSequence slice(int64_t lo, int64_t n) const;
  void validate() const;                 // range + shape invariants
};

struct ClipSample {
  FrameSequence input;   // exactly 8 frames
  FrameSequence target;  // >= 1 frames, immediately following
  double motion_label = -1.0;  // labeled pan velocity when known (synth)
};

struct IndexEntry {
  std::string source_id;
  int64_t start_index = 0;
};

enum class DatasetKind { kTrain, kEval };

struct DatasetIndex {
  std::vector<IndexEntry> entries;
  int64_t total_frames = 0;
  std::string root;
  int64_t window = 10;  // frames an entry must be able to supply

  void save_cache(const std::string& path) const;
  static DatasetIndex load_cache(const std::string& path, const std::string& root);
};

/// Scan `<root>/<sequence>/<frame>.<png|jpg>` directories. Train kind:
/// non-overlapping `window`-frame offsets (0, window, 2*window, ...);
/// eval kind: sliding windows at `stride`. Too-short sequences are skipped
/// (count reported via the returned index's entry set).
DatasetIndex ingest(const std::string& root, DatasetKind kind,
                    int64_t window = 10, int64_t stride = 10);

/// Center-crop to the largest target-aspect region, area-resample to the
/// target size. Input (3,H,W) in [0,1].
Tensor preprocess(const Tensor& raw_frame, int64_t target_h = 128,
                  int64_t target_w = 160);

/// Clip alignment: window frame 0 unused, input = frames 1..8, target =
/// frames 9..(8+target_len). Entry windows must cover 9 + target_len frames.
ClipSample load_clip(const DatasetIndex& index, size_t entry,
                     int64_t target_h = 128, int64_t target_w = 160,
                     int64_t target_len = 1);

/// Keep frames 0, factor, 2*factor, ...
FrameSequence temporal_downsample(const FrameSequence& seq, int64_t factor);

/// Mirror every frame about the vertical axis (last tensor axis).
Tensor hflip(const Tensor& frames);

/// With p=0.5, flip input and target together; otherwise untouched.
void augment_flip(ClipSample& clip, RngStream& rng);

/// What trainers and evaluators consume; index-addressable and stateless.
class ClipDataset {
 public:
  virtual ~ClipDataset() = default;
  virtual size_t size() const = 0;
  virtual ClipSample get(size_t i) const = 0;
};

/// Directory-backed dataset (KITTI/Caltech-style frame folders).
class DirDataset : public ClipDataset {
 public:
  DirDataset(DatasetIndex index, int64_t target_h, int64_t target_w,
             int64_t target_len = 1);
  size_t size() const override { return index_.entries.size(); }
  ClipSample get(size_t i) const override;

 private:
  DatasetIndex index_;
  int64_t th_, tw_, tlen_;
};

/// In-memory dataset over pre-rendered sequences (synthetic data). Windows
/// follow the same alignment as load_clip.
class MemoryDataset : public ClipDataset {
 public:
  MemoryDataset(std::vector<FrameSequence> sequences,
                std::vector<double> motion_labels, int64_t target_len = 1,
                int64_t stride = 10);
  size_t size() const override { return windows_.size(); }
  ClipSample get(size_t i) const override;

 private:
  std::vector<FrameSequence> seqs_;
  std::vector<double> labels_;
  std::vector<std::pair<size_t, int64_t>> windows_;  // (sequence, start)
  int64_t tlen_;
};

}  // namespace vidpred::data
