// Scalar reference kernels. These define the results; the vector variants
// must reproduce them bit-for-bit.

#include <bit>

#include "northeast/counter_rng.hpp"
#include "northeast/simd/kernels.hpp"

namespace ne::simd {

namespace {

void bernoulli_row_scalar(const BernoulliRowArgs& a, std::size_t n, std::uint8_t* out) {
  const rng::Key key{a.key0, a.key1};
  for (std::size_t i = 0; i < n; ++i) {
    const rng::Counter c{static_cast<std::uint32_t>(a.x0 + static_cast<std::int32_t>(i)),
                         static_cast<std::uint32_t>(a.y), 0, a.tag};
    out[i] = (rng::philox_u64(c, key) >> 11) < a.threshold ? 1 : 0;
  }
}

void eligibility_row_scalar(const std::uint8_t* south, const std::uint8_t* row, std::uint8_t west_ghost,
                            std::size_t n, std::uint8_t* out) {
  if (n == 0) return;
  out[0] = south[0] & west_ghost;
  for (std::size_t i = 1; i < n; ++i) out[i] = south[i] & row[i - 1];
}

inline std::uint64_t xoshiro_next(XoshiroLanes& l, int lane) {
  auto& s = l.s;
  const std::uint64_t result = std::rotl(s[0][lane] + s[3][lane], 23) + s[0][lane];
  const std::uint64_t t = s[1][lane] << 17;
  s[2][lane] ^= s[0][lane];
  s[3][lane] ^= s[1][lane];
  s[1][lane] ^= s[2][lane];
  s[0][lane] ^= s[3][lane];
  s[2][lane] ^= t;
  s[3][lane] = std::rotl(s[3][lane], 45);
  return result;
}

void bernoulli_words_scalar(XoshiroLanes& lanes, std::uint32_t q16, std::size_t n_words, std::uint64_t* out) {
  if (q16 == 0 || q16 >= (1u << 16)) {
    const std::uint64_t fill = q16 == 0 ? 0 : ~std::uint64_t{0};
    for (std::size_t i = 0; i < n_words; ++i) out[i] = fill;
    return;
  }
  const int low = std::countr_zero(q16);
  for (std::size_t base = 0; base < n_words; base += 4) {
    for (int lane = 0; lane < 4; ++lane) {
      std::uint64_t acc = 0;
      for (int bit = low; bit < 16; ++bit) {
        const std::uint64_t w = xoshiro_next(lanes, lane);
        acc = (q16 >> bit) & 1u ? (acc | w) : (acc & w);
      }
      if (base + static_cast<std::size_t>(lane) < n_words) out[base + static_cast<std::size_t>(lane)] = acc;
    }
  }
}

bool front_step_scalar(const std::uint64_t* cur, const std::uint64_t* open, std::size_t n_words,
                       std::uint64_t* next) {
  std::uint64_t any = 0;
  std::uint64_t carry = 0;
  for (std::size_t w = 0; w < n_words; ++w) {
    const std::uint64_t c = cur[w];
    next[w] = open[w] & (c | (c << 1) | carry);
    carry = c >> 63;
    any |= next[w];
  }
  return any != 0;
}

std::size_t count_ones_scalar(const std::uint8_t* data, std::size_t n) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += data[i];
  return total;
}

}  // namespace

namespace detail {
const KernelTable kScalarKernels{
    &bernoulli_row_scalar, &eligibility_row_scalar, &bernoulli_words_scalar,
    &front_step_scalar,    &count_ones_scalar,
};
}  // namespace detail

}  // namespace ne::simd
