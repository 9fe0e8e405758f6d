#include "vidpred/core/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vidpred {

RngStream::RngStream(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream),
                    static_cast<uint32_t>(stream >> 32), 0x9e3779b9u};
  eng_.seed(seq);
}

double RngStream::u01() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  double u1 = u01();
  double u2 = u01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool RngStream::bernoulli(double p) { return u01() < p; }

int64_t RngStream::uniform_int(int64_t n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  return static_cast<int64_t>(eng_() % static_cast<uint64_t>(n));
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * u01();
}

std::string RngStream::state() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void RngStream::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> eng_;
  if (is.fail()) throw std::runtime_error("RngStream: bad serialized state");
}

}  // namespace vidpred
