#pragma once

#include <cstdint>

namespace ppcc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mixes an arbitrary number of values into one seed. Used to derive
/// per-cell and per-purpose seeds so that repeated runs are reproducible
/// and independent cells do not share streams.
inline std::uint64_t mix64(std::uint64_t a) {
  std::uint64_t s = a;
  return splitmix64(s);
}

template <typename... Rest>
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, Rest... rest) {
  std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  return mix64(splitmix64(s), rest...);
}

/// xoshiro256++ with explicit integer sampling. The standard <random>
/// distributions are implementation-defined, so everything here is
/// hand-rolled to keep runs bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Unbiased draw from [0, bound). bound must be nonzero.
  std::uint64_t uniform_u64(std::uint64_t bound) {
    // Lemire's multiply-shift rejection method.
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Inclusive range draw.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform_u64(span));
  }

  /// True with probability p, exact to the double's 53-bit resolution.
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    const auto threshold = static_cast<std::uint64_t>(p * 9007199254740992.0);
    return (next() >> 11) < threshold;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

// Per-purpose stream tags; every consumer derives its stream as
// Rng(mix64(seed, tag)) so adding a consumer never perturbs the others.
inline constexpr std::uint64_t kStreamWorkload = 0x776b6c64;  // "wkld"
inline constexpr std::uint64_t kStreamDelays = 0x646c6179;    // "dlay"
inline constexpr std::uint64_t kStreamTiming = 0x74696d65;    // "time"

}  // namespace ppcc
