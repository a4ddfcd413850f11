#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace taxrisk {

// Deterministic xorshift-family generator (xoshiro256** seeded through
// splitmix64). All transforms below are defined purely in terms of integer
// arithmetic and IEEE doubles so streams replay bit-identically across
// platforms, unlike std::uniform_real_distribution which is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_state(seed); }

  // Decorrelated substream: stream k of a given seed. Used to give each
  // firm / phase its own generator so insertion order elsewhere cannot
  // perturb draws.
  Rng(std::uint64_t seed, std::uint64_t stream)
      : Rng(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1))) {}

  std::uint64_t next_u64() {
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

  // Uniform in [0,1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; always consumes exactly two uniform draws so the stream
  // position is independent of whether a cached mate is used.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double z = r * std::cos(6.283185307179586476925286766559 * u2);
    return mean + stddev * z;
  }

  // Uniform integer in [0, n). Modulo reduction; the bias is < n / 2^64
  // which is irrelevant at the ranges used here.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64_next(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  void seed_state(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64_next(x);
  }

  std::uint64_t s_[4];
};

}  // namespace taxrisk
