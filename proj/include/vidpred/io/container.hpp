#pragma once

#include <map>
#include <string>

#include "vidpred/core/tensor.hpp"

namespace vidpred::io {

/// Versioned binary container of named double arrays plus a free-form
/// metadata string (JSON by convention), with a trailing CRC32. Checkpoints,
/// backbone weights and metric weights all use this one format.
struct Container {
  std::map<std::string, Tensor> arrays;
  std::string meta;

  void save(const std::string& path) const;
  static Container load(const std::string& path);

  /// Fetch with shape validation; throws naming the entry on mismatch.
  const Tensor& expect(const std::string& name,
                       const std::vector<int64_t>& shape) const;
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return arrays.count(name) != 0; }
};

}  // namespace vidpred::io
