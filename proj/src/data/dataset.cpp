#include "vidpred/data/dataset.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "vidpred/io/image.hpp"

namespace vidpred::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<std::string> list_frames(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && frame_file(e.path()))
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<std::pair<std::string, std::vector<std::string>>> list_sequences(
    const std::string& root) {
  if (!fs::is_directory(root))
    throw std::runtime_error("dataset: not a directory: " + root);
  std::vector<std::pair<std::string, std::vector<std::string>>> seqs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory())
      seqs.emplace_back(e.path().filename().string(),
                        list_frames(e.path().string()));
  std::sort(seqs.begin(), seqs.end());
  return seqs;
}

void check_unit_range(const Tensor& t, const char* what) {
  if (!t.all_finite() || t.min() < 0.0 || t.max() > 1.0)
    throw std::runtime_error(std::string(what) + ": frame values outside [0,1]");
}

}  // namespace

Tensor FrameSequence::frame(int64_t k) const {
  const int64_t n = length(), h = frames.dim(2), w = frames.dim(3);
  if (k < 0 || k >= n) throw std::out_of_range("FrameSequence: frame index");
  Tensor out({3, h, w});
  const int64_t plane = h * w;
  for (int64_t c = 0; c < 3; ++c)
    std::copy(frames.data() + (c * n + k) * plane,
              frames.data() + (c * n + k + 1) * plane, out.data() + c * plane);
  return out;
}

FrameSequence FrameSequence::slice(int64_t lo, int64_t n) const {
  const int64_t len = length(), h = frames.dim(2), w = frames.dim(3);
  if (lo < 0 || n < 1 || lo + n > len)
    throw std::out_of_range("FrameSequence: slice out of range");
  FrameSequence out;
  out.frames = Tensor({3, n, h, w});
  out.source_id = source_id;
  out.start_index = start_index + lo;
  const int64_t plane = h * w;
  for (int64_t c = 0; c < 3; ++c)
    std::copy(frames.data() + (c * len + lo) * plane,
              frames.data() + (c * len + lo + n) * plane,
              out.frames.data() + c * n * plane);
  return out;
}

void FrameSequence::validate() const {
  if (frames.ndim() != 4 || frames.dim(0) != 3 || frames.dim(1) < 1)
    throw std::invalid_argument("FrameSequence: frames must be (3,n,H,W), n>=1");
  check_unit_range(frames, "FrameSequence");
}

DatasetIndex ingest(const std::string& root, DatasetKind kind, int64_t window,
                    int64_t stride) {
  if (window < 1 || stride < 1)
    throw std::invalid_argument("dataset: window and stride must be >= 1");
  auto seqs = list_sequences(root);
  DatasetIndex idx;
  idx.root = root;
  idx.window = window;
  size_t skipped = 0;
  for (const auto& [id, files] : seqs) {
    const auto n = static_cast<int64_t>(files.size());
    idx.total_frames += n;
    if (n < window) {
      if (n > 0) ++skipped;
      continue;
    }
    const int64_t step = (kind == DatasetKind::kTrain) ? window : stride;
    for (int64_t s = 0; s + window <= n; s += step)
      idx.entries.push_back({id, s});
  }
  if (idx.entries.empty())
    throw std::runtime_error("dataset: no sequences found under " + root);
  if (skipped > 0)
    std::cerr << "dataset: skipped " << skipped
              << " sequence(s) shorter than the " << window << "-frame window\n";
  return idx;
}

void DatasetIndex::save_cache(const std::string& path) const {
  json j = json::array();
  for (const auto& e : entries)
    j.push_back({{"source_id", e.source_id}, {"start_index", e.start_index}});
  json doc{{"entries", j}, {"total_frames", total_frames}, {"window", window}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot write cache " + path);
  out << doc.dump(2) << "\n";
}

DatasetIndex DatasetIndex::load_cache(const std::string& path,
                                      const std::string& root) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot read cache " + path);
  json doc = json::parse(in);
  DatasetIndex idx;
  idx.root = root;
  idx.total_frames = doc.value("total_frames", 0);
  idx.window = doc.value("window", 10);
  for (const auto& e : doc.at("entries"))
    idx.entries.push_back(
        {e.at("source_id").get<std::string>(), e.at("start_index").get<int64_t>()});
  return idx;
}

Tensor preprocess(const Tensor& raw_frame, int64_t target_h, int64_t target_w) {
  const auto& s = raw_frame.shape();
  if (s.size() != 3 || s[0] != 3)
    throw std::invalid_argument("preprocess: expected (3,H,W)");
  const int64_t h = s[1], w = s[2];
  // largest centered region with the target aspect ratio
  int64_t crop_h = h, crop_w = (h * target_w) / target_h;
  if (crop_w > w) {
    crop_w = w;
    crop_h = (w * target_h) / target_w;
  }
  if (crop_h < 1 || crop_w < 1 || crop_h > h || crop_w > w)
    throw std::invalid_argument("preprocess: frame too small for aspect crop");
  const int64_t y0 = (h - crop_h) / 2, x0 = (w - crop_w) / 2;
  Tensor crop({3, crop_h, crop_w});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < crop_h; ++y)
      std::copy(raw_frame.data() + (c * h + y0 + y) * w + x0,
                raw_frame.data() + (c * h + y0 + y) * w + x0 + crop_w,
                crop.data() + (c * crop_h + y) * crop_w);
  Tensor out = (crop_h == target_h && crop_w == target_w)
                   ? std::move(crop)
                   : io::resize_area(crop, target_h, target_w);
  // area resampling of in-range data stays in range up to rounding
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(out[i], 0.0, 1.0);
  return out;
}

ClipSample load_clip(const DatasetIndex& index, size_t entry, int64_t target_h,
                     int64_t target_w, int64_t target_len) {
  if (entry >= index.entries.size())
    throw std::out_of_range("dataset: entry index");
  const auto& e = index.entries[entry];
  const auto files = list_frames(index.root + "/" + e.source_id);
  const int64_t need = e.start_index + 9 + target_len;
  if (static_cast<int64_t>(files.size()) < need)
    throw std::runtime_error("dataset: sequence " + e.source_id +
                             " too short for entry window");
  auto read = [&](int64_t k) {
    return preprocess(io::load_image_rgb(files[static_cast<size_t>(k)]),
                      target_h, target_w);
  };
  ClipSample sample;
  sample.input.frames = Tensor({3, 8, target_h, target_w});
  sample.input.source_id = e.source_id;
  sample.input.start_index = e.start_index + 1;
  sample.target.frames = Tensor({3, target_len, target_h, target_w});
  sample.target.source_id = e.source_id;
  sample.target.start_index = e.start_index + 9;
  const int64_t plane = target_h * target_w;
  for (int64_t k = 0; k < 8; ++k) {
    Tensor f = read(e.start_index + 1 + k);
    for (int64_t c = 0; c < 3; ++c)
      std::copy(f.data() + c * plane, f.data() + (c + 1) * plane,
                sample.input.frames.data() + (c * 8 + k) * plane);
  }
  for (int64_t k = 0; k < target_len; ++k) {
    Tensor f = read(e.start_index + 9 + k);
    for (int64_t c = 0; c < 3; ++c)
      std::copy(f.data() + c * plane, f.data() + (c + 1) * plane,
                sample.target.frames.data() + (c * target_len + k) * plane);
  }
  sample.input.validate();
  sample.target.validate();
  return sample;
}

FrameSequence temporal_downsample(const FrameSequence& seq, int64_t factor) {
  if (factor < 1) throw std::invalid_argument("temporal_downsample: factor >= 1");
  if (factor == 1) return seq;
  const int64_t n = seq.length();
  const int64_t kept = (n + factor - 1) / factor;
  const int64_t h = seq.frames.dim(2), w = seq.frames.dim(3);
  FrameSequence out;
  out.frames = Tensor({3, kept, h, w});
  out.source_id = seq.source_id;
  out.start_index = seq.start_index;
  const int64_t plane = h * w;
  for (int64_t k = 0; k < kept; ++k) {
    const int64_t src = k * factor;
    for (int64_t c = 0; c < 3; ++c)
      std::copy(seq.frames.data() + (c * n + src) * plane,
                seq.frames.data() + (c * n + src + 1) * plane,
                out.frames.data() + (c * kept + k) * plane);
  }
  return out;
}

Tensor hflip(const Tensor& frames) {
  const auto& s = frames.shape();
  if (s.empty()) throw std::invalid_argument("hflip: empty tensor");
  const int64_t w = s.back();
  const int64_t rows = frames.size() / w;
  Tensor out(s);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t x = 0; x < w; ++x)
      out[r * w + (w - 1 - x)] = frames[r * w + x];
  return out;
}

void augment_flip(ClipSample& clip, RngStream& rng) {
  if (!rng.bernoulli(0.5)) return;
  clip.input.frames = hflip(clip.input.frames);
  clip.target.frames = hflip(clip.target.frames);
}

DirDataset::DirDataset(DatasetIndex index, int64_t target_h, int64_t target_w,
                       int64_t target_len)
    : index_(std::move(index)), th_(target_h), tw_(target_w), tlen_(target_len) {}

ClipSample DirDataset::get(size_t i) const {
  return load_clip(index_, i, th_, tw_, tlen_);
}

MemoryDataset::MemoryDataset(std::vector<FrameSequence> sequences,
                             std::vector<double> motion_labels,
                             int64_t target_len, int64_t stride)
    : seqs_(std::move(sequences)), labels_(std::move(motion_labels)),
      tlen_(target_len) {
  if (!labels_.empty() && labels_.size() != seqs_.size())
    throw std::invalid_argument("MemoryDataset: one motion label per sequence");
  if (stride < 1) throw std::invalid_argument("MemoryDataset: stride >= 1");
  const int64_t window = 9 + tlen_;
  for (size_t q = 0; q < seqs_.size(); ++q) {
    seqs_[q].validate();
    for (int64_t s = 0; s + window <= seqs_[q].length(); s += stride)
      windows_.emplace_back(q, s);
  }
  if (windows_.empty())
    throw std::invalid_argument("MemoryDataset: no sequence long enough for a window");
}

ClipSample MemoryDataset::get(size_t i) const {
  const auto [q, s] = windows_.at(i);
  ClipSample sample;
  sample.input = seqs_[q].slice(s + 1, 8);
  sample.target = seqs_[q].slice(s + 9, tlen_);
  if (!labels_.empty()) sample.motion_label = labels_[q];
  return sample;
}

}  // namespace vidpred::data
