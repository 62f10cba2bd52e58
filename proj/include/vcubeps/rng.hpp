#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "vcubeps/core.hpp"

// Reproducible random streams. Every (seed, label) pair yields an
// independent substream, so adding instrumentation or reordering draws in
// one place never perturbs another. std::* distributions are avoided on
// purpose: their output is not pinned by the standard.

namespace vcubeps {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded from (seed, fnv1a(label)) via splitmix64.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    std::uint64_t sm = seed ^ h;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound), bound >= 1. Rejection-free Lemire trick.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw ArgumentError("rng bound must be positive");
    while (true) {
      const std::uint64_t x = next();
      const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
      const std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= bound || lo >= (-bound) % bound)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ArgumentError("uniform_int: empty range");
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exponential with the given mean, rounded to an integer >= 1 u.t.
  SimTime exponential_ut(double mean) {
    double u = uniform01();
    if (u <= 0.0) u = 0x1.0p-53;
    const double x = -mean * std::log(u);
    SimTime t = static_cast<SimTime>(std::llround(x));
    return t < 1 ? 1 : t;
  }

  bool chance(double p) { return uniform01() < p; }

  /// k distinct elements sampled without replacement from [0, n).
  std::vector<std::uint32_t> sample_ids(std::uint32_t n, std::uint32_t k);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

/// Cumulative-table sampler for rank-frequency ∝ rank^(-coeff), ranks 1..n.
class ZipfSampler {
 public:
  ZipfSampler(std::uint32_t n, double coeff);
  std::uint32_t draw(RngStream& rng) const;  // 0-based rank

 private:
  std::vector<double> cdf_;
};

}  // namespace vcubeps
