#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace vidpred {

/// Deterministic random stream. mt19937_64 is bit-reproducible across
/// platforms per the standard; the distribution helpers here are hand-rolled
/// because std:: distributions are not. State round-trips through a string,
/// which is what checkpoints store.
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint64_t stream = 0);

  /// Uniform in [0,1), 53-bit resolution.
  double u01();
  /// Standard normal via Box-Muller (two u01 draws, cosine branch).
  double normal();
  bool bernoulli(double p);
  /// Uniform integer in [0,n).
  int64_t uniform_int(int64_t n);
  double uniform(double lo, double hi);

  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 eng_;
};

}  // namespace vidpred
