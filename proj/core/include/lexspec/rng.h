#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace lexspec {

// Seeded pseudo-random source shared by every stochastic component.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions are implemented here rather than taken from
// <random>, because the standard distributions are implementation-defined and
// would break cross-platform reproducibility:
//   uniform()          53 high bits of one draw, scaled to [0, 1)
//   uniform_index(n)   rejection sampling on the top of the 64-bit range
//   normal()           Box-Muller, one variate per call (two draws)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t uniform_index(std::size_t n);
  double normal();

  // Number of raw 64-bit draws consumed so far.
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace lexspec
