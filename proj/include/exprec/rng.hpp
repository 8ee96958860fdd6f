#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace exprec {

/// Counter-based generator: output i of stream s under key k is a pure
/// function of (k, s, i), so draws are reproducible across platforms and do
/// not depend on how work is split between threads.
class CounterRng {
public:
  CounterRng(std::uint64_t key, std::uint64_t stream) : key_(mix(key ^ 0x6a09e667f3bcc909ULL)), stream_(stream) {}

  std::uint64_t at(std::uint64_t counter) const {
    return mix(mix(key_ + stream_ * 0x9e3779b97f4a7c15ULL) ^ (counter * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
  }

  std::uint64_t next() { return at(counter_++); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      std::uint64_t v = next();
      if (v < limit) return v % n;
    }
  }

  /// Standard normal via Box-Muller (one value per pair of uniforms).
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace exprec
