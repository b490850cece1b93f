#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace mocana {

// splitmix64 finalizer, used to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for stream `index` of a run keyed by `master`. Streams with
// different indices are decorrelated, so sessions can be scheduled on
// any worker without changing their results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x51a9b2c3d4e5f607ULL));
}

// Deterministic RNG stream. The standard <random> distributions are
// implementation-defined, so all draws are generated from raw engine
// output; replays are bit-identical for a given seed on any platform.
class Rng {
 public:
  Rng() : engine_(0xda3e39cb94b95bdbULL) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  void seed(std::uint64_t s) { engine_.seed(s); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], both inclusive. Rejection sampling keeps
  // the draw unbiased for any span.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full range
    const std::uint64_t threshold = (0 - span) % span;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return lo + static_cast<std::int64_t>(r % span);
    }
  }

  // Standard normal via Box-Muller. No cached spare: every draw consumes
  // exactly two engine outputs, which keeps replay offsets predictable.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Normal(mean, stddev^2); a degenerate stddev returns the mean exactly
  // without consuming engine output.
  double normal(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    return mean + stddev * normal();
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mocana
