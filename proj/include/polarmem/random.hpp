#pragma once

#include <cstdint>
#include <random>

namespace polarmem {

/// 64-bit Mersenne Twister behind a small portable interface. Distributions are
/// implemented here rather than through <random> so that sampled values do not
/// depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  /// Independent stream for (seed, index), e.g. one per simulated frame.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed) ^ mix(index + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  unsigned bit() { return static_cast<unsigned>(next() >> 63); }

  /// Uniform integer in [0, n), n > 0, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do r = next();
    while (r >= limit);
    return r % n;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace polarmem
