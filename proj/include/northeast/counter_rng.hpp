#pragma once

// Counter-based random numbers. Philox4x32-10 (Salmon et al., SC'11) maps a
// 128-bit counter and a 64-bit key to 128 pseudorandom bits with no state, so
// any stream element can be regenerated in any order.

#include <array>
#include <cmath>
#include <cstdint>

namespace ne::rng {

using Counter = std::array<std::uint32_t, 4>;

struct Key {
  std::uint32_t k0 = 0;
  std::uint32_t k1 = 0;
};

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

constexpr Counter philox4x32_10(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k.k0, lo1, hi0 ^ c[3] ^ k.k1, lo0};
    k.k0 += kPhiloxW0;
    k.k1 += kPhiloxW1;
  }
  return c;
}

/// Low 64 bits of a Philox block.
constexpr std::uint64_t philox_u64(Counter c, Key k) {
  const Counter o = philox4x32_10(c, k);
  return (static_cast<std::uint64_t>(o[1]) << 32) | o[0];
}

/// 53-bit uniform strictly inside (0,1).
inline double to_open_unit(std::uint64_t w) {
  return (static_cast<double>(w >> 11) + 0.5) * 0x1p-53;
}

/// Threshold t such that (w >> 11) < t has probability floor(p 2^53) / 2^53.
inline std::uint64_t bernoulli_threshold(double p) {
  if (!(p > 0.0)) return 0;
  if (p >= 1.0) return std::uint64_t{1} << 53;
  return static_cast<std::uint64_t>(std::floor(p * 0x1p53));
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t v) {
  std::uint64_t s = v;
  return splitmix64(s);
}

}  // namespace ne::rng
