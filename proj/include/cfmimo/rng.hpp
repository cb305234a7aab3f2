#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cfmimo {

/// Stage tags for deriving child RNG streams. Every stochastic stage of the
/// pipeline pulls from its own stream so any cell of a sweep is reproducible
/// in isolation and results do not depend on evaluation order.
enum class RngStage : std::uint64_t {
  Topology = 1,
  Paths = 2,
  Channel = 3,
  UplinkNoise = 4,
  QuantNoise = 5,
  CompressionNoise = 6,
  Test = 99,
};

/// Deterministic pseudo-random stream. Child streams are keyed by
/// (master seed, drop, block, stage); the key is mixed into a single seed,
/// so parallel and serial execution over drops produce identical draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream child(std::uint64_t master, std::uint64_t drop, std::uint64_t block,
                         RngStage stage) {
    std::uint64_t s = mix(master);
    s = mix(s ^ (0x9e3779b97f4a7c15ULL + drop));
    s = mix(s ^ (0xbf58476d1ce4e5b9ULL + block));
    s = mix(s ^ (0x94d049bb133111ebULL + static_cast<std::uint64_t>(stage)));
    return RngStream(s);
  }

  double uniform() { return unif_(engine_); }                       // [0, 1)
  double normal() { return norm_(engine_); }                       // N(0, 1)
  std::complex<double> cnormal() {                                  // CN(0, 1)
    const double inv_sqrt2 = 0.7071067811865476;
    double re = norm_(engine_);
    double im = norm_(engine_);
    return {re * inv_sqrt2, im * inv_sqrt2};
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

 private:
  // splitmix64 finalizer; decorrelates sequential keys.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace cfmimo
