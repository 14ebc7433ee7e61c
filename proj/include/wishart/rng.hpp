#pragma once

// Per-index random streams. Stream k of a run is a Mersenne Twister seeded
// from (seed, k) through std::seed_seq, so sample k is the same no matter
// which worker draws it.

#include <cstdint>
#include <random>

namespace wishart {

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x57495348u};
    engine_.seed(seq);
  }

  double gaussian() { return normal_(engine_); }

  /// Chi-square with real dof >= 0 (dof 0 is the point mass at 0).
  double chi_square(double dof) {
    if (dof <= 0.0) return 0.0;
    std::gamma_distribution<double> g(0.5 * dof, 2.0);
    return g(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace wishart
