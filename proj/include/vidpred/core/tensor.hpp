#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace vidpred {

/// Dense row-major tensor of doubles. Value semantics; shape is a small
/// vector of extents. All numeric state in the project flows through this
/// one type (frames, activations, weights, optimizer moments).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, double fill_value);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// Multi-index access, mostly for tests and small hot-free paths.
  double& at(std::initializer_list<int64_t> idx);
  double at(std::initializer_list<int64_t> idx) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  void fill(double v);
  bool all_finite() const;
  double min() const;
  double max() const;
  double sum() const;

  /// In-place elementwise += (shapes must match).
  void add_(const Tensor& other);
  void scale_(double s);

  Tensor reshaped(std::vector<int64_t> shape) const;

 private:
  int64_t offset(std::initializer_list<int64_t> idx) const;

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<int64_t>& shape);
inline std::string shape_str(const Tensor& t) { return shape_str(t.shape()); }

/// Throws std::invalid_argument with the mismatching shapes spelled out.
void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace vidpred
