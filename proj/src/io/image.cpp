#include "vidpred/io/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vidpred::io {
namespace {

cv::Mat to_mat_bgr8(const Tensor& frame) {
  const auto& s = frame.shape();
  if (s.size() != 3 || s[0] != 3)
    throw std::invalid_argument("image: expected (3,H,W) tensor");
  const int h = static_cast<int>(s[1]), w = static_cast<int>(s[2]);
  cv::Mat m(h, w, CV_8UC3);
  const int64_t plane = s[1] * s[2];
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int64_t i = static_cast<int64_t>(y) * w + x;
      auto q = [&](int c) {
        const double v = std::clamp(frame[static_cast<int64_t>(c) * plane + i], 0.0, 1.0);
        return static_cast<unsigned char>(std::lround(v * 255.0));
      };
      m.at<cv::Vec3b>(y, x) = cv::Vec3b(q(2), q(1), q(0));  // BGR order
    }
  return m;
}

}  // namespace

Tensor load_image_rgb(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) throw std::runtime_error("image: cannot decode " + path);
  Tensor t({3, m.rows, m.cols});
  const int64_t plane = static_cast<int64_t>(m.rows) * m.cols;
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const cv::Vec3b px = m.at<cv::Vec3b>(y, x);
      const int64_t i = static_cast<int64_t>(y) * m.cols + x;
      t[0 * plane + i] = px[2] / 255.0;
      t[1 * plane + i] = px[1] / 255.0;
      t[2 * plane + i] = px[0] / 255.0;
    }
  return t;
}

void save_image_rgb(const std::string& path, const Tensor& frame) {
  if (!cv::imwrite(path, to_mat_bgr8(frame)))
    throw std::runtime_error("image: cannot write " + path);
}

Tensor resize_area(const Tensor& frame, int64_t out_h, int64_t out_w) {
  const auto& s = frame.shape();
  if (s.size() != 3 || s[0] != 3)
    throw std::invalid_argument("image: expected (3,H,W) tensor");
  const int h = static_cast<int>(s[1]), w = static_cast<int>(s[2]);
  const int64_t in_plane = s[1] * s[2];
  // resize in double precision, one plane at a time
  Tensor out({3, out_h, out_w});
  const int64_t out_plane = out_h * out_w;
  for (int c = 0; c < 3; ++c) {
    cv::Mat src(h, w, CV_64FC1, const_cast<double*>(frame.data()) + c * in_plane);
    cv::Mat dst(static_cast<int>(out_h), static_cast<int>(out_w), CV_64FC1,
                out.data() + c * out_plane);
    cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_AREA);
  }
  return out;
}

Tensor hstack_frames(const std::vector<Tensor>& frames) {
  if (frames.empty()) throw std::invalid_argument("image: nothing to stack");
  const int64_t h = frames[0].dim(1);
  constexpr int64_t kGap = 2;
  int64_t w_total = 0;
  for (const auto& f : frames) {
    if (f.ndim() != 3 || f.dim(0) != 3 || f.dim(1) != h)
      throw std::invalid_argument("image: strip frames must share (3,H,*)");
    w_total += f.dim(2);
  }
  w_total += kGap * (static_cast<int64_t>(frames.size()) - 1);
  Tensor out({3, h, w_total}, 1.0);  // white dividers
  int64_t x0 = 0;
  for (const auto& f : frames) {
    const int64_t w = f.dim(2);
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y = 0; y < h; ++y)
        std::copy(f.data() + (c * h + y) * w, f.data() + (c * h + y) * w + w,
                  out.data() + (c * h + y) * w_total + x0);
    x0 += w + kGap;
  }
  return out;
}

}  // namespace vidpred::io
