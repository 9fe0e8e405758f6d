#include "vidpred/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vidpred {

namespace {
int64_t count(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor extent");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(count(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int64_t> shape, double fill_value)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(count(shape_)), fill_value) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (count(shape_) != static_cast<int64_t>(data_.size()))
    throw std::invalid_argument("tensor data size does not match shape " +
                                shape_str(shape_));
}

int64_t Tensor::offset(std::initializer_list<int64_t> idx) const {
  if (static_cast<int>(idx.size()) != ndim())
    throw std::invalid_argument("index rank mismatch");
  int64_t off = 0;
  int i = 0;
  for (int64_t v : idx) {
    if (v < 0 || v >= shape_[static_cast<size_t>(i)])
      throw std::out_of_range("tensor index out of range");
    off = off * shape_[static_cast<size_t>(i)] + v;
    ++i;
  }
  return off;
}

double& Tensor::at(std::initializer_list<int64_t> idx) {
  return data_[static_cast<size_t>(offset(idx))];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  return data_[static_cast<size_t>(offset(idx))];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::min() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

void Tensor::add_(const Tensor& other) {
  check_same_shape(*this, other, "Tensor::add_");
  const double* src = other.data();
  double* dst = data();
  for (int64_t i = 0; i < size(); ++i) dst[i] += src[i];
}

void Tensor::scale_(double s) {
  for (double& v : data_) v *= s;
}

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
  if (count(shape) != size())
    throw std::invalid_argument("reshape element count mismatch: " +
                                shape_str(shape_) + " -> " + shape_str(shape));
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_str(a) + " vs " + shape_str(b));
}

}  // namespace vidpred
