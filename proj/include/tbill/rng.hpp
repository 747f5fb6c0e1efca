#pragma once

#include <cstdint>
#include <vector>

namespace tbill {

/// SplitMix64 generator. All randomness in the project flows from one of
/// these, so any reimplementation can reproduce runs bit for bit:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() takes the top 53 bits: (next() >> 11) * 2^-53.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (lo, hi); never returns the endpoints.
  double uniform(double lo, double hi) {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return lo + (hi - lo) * u;
  }

  /// Uniform point of the open (d-1)-simplex {x_i > 0, sum x_i = 1},
  /// via normalized exponential spacings.
  std::vector<double> simplex(int d);

  /// Child generator for ensemble member `index`; independent of how many
  /// draws the parent has made.
  static SplitMix64 derive(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
    g.next();
    return g;
  }

 private:
  std::uint64_t state_;
};

}  // namespace tbill
