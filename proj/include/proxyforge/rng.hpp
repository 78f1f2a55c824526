#pragma once

// Seeded, portable random number generation. Everything downstream of a seed
// must reproduce bit-for-bit across platforms and thread counts, so we avoid
// the standard <random> distributions (their output is implementation
// defined) and generate from SplitMix64 directly.

#include <cmath>
#include <cstdint>

namespace proxyforge {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// SplitMix64 (Steele, Lea & Flood 2014): 64-bit state, full-period, trivially
// splittable by hashing the (seed, stream index) pair into a fresh state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix64(z);
  }

  // uniform in [0, 1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]; safe as a log() argument
  double uniform01_positive() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Independent generator for one sample index. Serial and parallel runs that
// touch the same indices therefore see identical draws, which is what makes
// thread-count-invariant search and simulation possible.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = mix64(seed + 0x9e3779b97f4a7c15ULL);
  const std::uint64_t b = mix64(index ^ 0xda942042e4dd58b5ULL);
  return SplitMix64(a ^ (b + 0x632be59bd9b4e019ULL));
}

// Standard normals via the trigonometric Box-Muller transform. The pair is
// cached, so one stream consumes exactly one uniform pair per two variates.
class GaussianStream {
 public:
  explicit GaussianStream(SplitMix64 gen) : gen_(gen) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = gen_.uniform01_positive();
    const double u2 = gen_.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double uniform01() { return gen_.uniform01(); }

 private:
  SplitMix64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace proxyforge
