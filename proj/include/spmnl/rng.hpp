#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spmnl {

/// SplitMix64 finaliser. Used to derive independent stream seeds from a
/// master seed and a counter so that every run, chain and class gets its
/// own reproducible stream.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter,
                                 std::uint64_t stream = 0) {
  return mix_seed(mix_seed(master ^ mix_seed(counter)) + stream);
}

/// Thin wrapper over mt19937_64 with the handful of variates the samplers use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return normal_(engine_); }

  /// Exponential with rate 1.
  double exponential() { return -std::log(uniform()); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace spmnl
