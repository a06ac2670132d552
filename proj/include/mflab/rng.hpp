#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mflab {

// Counter-based generator: every draw is a pure function of (seed, stream, counter, index),
// so results never depend on the order in which particles or runs are processed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter, std::uint64_t index) const {
    std::uint64_t h = mix(seed_ ^ 0x6a09e667f3bcc909ULL);
    h = mix(h ^ stream_);
    h = mix(h ^ counter);
    return mix(h ^ index);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter, std::uint64_t index) const {
    return (static_cast<double>(bits(counter, index) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on two independent uniforms.
  double normal(std::uint64_t counter, std::uint64_t index) const {
    const double u1 = uniform(counter, 2 * index);
    const double u2 = uniform(counter, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace mflab
