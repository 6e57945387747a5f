// AVX2 variants. Compiled with -mavx2 and only reached after CPUID says so.

#include <immintrin.h>

#include <bit>
#include <cstring>

#include "northeast/counter_rng.hpp"
#include "northeast/simd/kernels.hpp"

namespace ne::simd {

namespace {

// 32x32 -> 64 multiply of all eight lanes, split into hi and lo halves.
inline void mulhilo8(__m256i a, __m256i m, __m256i& hi, __m256i& lo) {
  const __m256i even = _mm256_mul_epu32(a, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), m);
  lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
  hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
}

void bernoulli_row_avx2(const BernoulliRowArgs& a, std::size_t n, std::uint8_t* out) {
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(rng::kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(rng::kPhiloxM1));
  const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256i thr = _mm256_set1_epi64x(static_cast<long long>(a.threshold));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i c0 = _mm256_add_epi32(_mm256_set1_epi32(a.x0 + static_cast<std::int32_t>(i)), lane);
    __m256i c1 = _mm256_set1_epi32(a.y);
    __m256i c2 = _mm256_setzero_si256();
    __m256i c3 = _mm256_set1_epi32(static_cast<int>(a.tag));
    std::uint32_t k0 = a.key0, k1 = a.key1;
    for (int round = 0; round < 10; ++round) {
      __m256i hi0, lo0, hi1, lo1;
      mulhilo8(c0, m0, hi0, lo0);
      mulhilo8(c2, m1, hi1, lo1);
      const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), _mm256_set1_epi32(static_cast<int>(k0)));
      const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), _mm256_set1_epi32(static_cast<int>(k1)));
      c0 = n0;
      c1 = lo1;
      c2 = n2;
      c3 = lo0;
      k0 += rng::kPhiloxW0;
      k1 += rng::kPhiloxW1;
    }
    // 64-bit words (c1 << 32 | c0); unpack gives lanes {0,1,4,5} and {2,3,6,7}.
    const __m256i wa = _mm256_srli_epi64(_mm256_unpacklo_epi32(c0, c1), 11);
    const __m256i wb = _mm256_srli_epi64(_mm256_unpackhi_epi32(c0, c1), 11);
    const int ma = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(thr, wa)));
    const int mb = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(thr, wb)));
    out[i + 0] = static_cast<std::uint8_t>(ma & 1);
    out[i + 1] = static_cast<std::uint8_t>((ma >> 1) & 1);
    out[i + 4] = static_cast<std::uint8_t>((ma >> 2) & 1);
    out[i + 5] = static_cast<std::uint8_t>((ma >> 3) & 1);
    out[i + 2] = static_cast<std::uint8_t>(mb & 1);
    out[i + 3] = static_cast<std::uint8_t>((mb >> 1) & 1);
    out[i + 6] = static_cast<std::uint8_t>((mb >> 2) & 1);
    out[i + 7] = static_cast<std::uint8_t>((mb >> 3) & 1);
  }
  if (i < n) {
    BernoulliRowArgs rest = a;
    rest.x0 = a.x0 + static_cast<std::int32_t>(i);
    detail::kScalarKernels.bernoulli_row(rest, n - i, out + i);
  }
}

void eligibility_row_avx2(const std::uint8_t* south, const std::uint8_t* row, std::uint8_t west_ghost,
                          std::size_t n, std::uint8_t* out) {
  if (n == 0) return;
  out[0] = south[0] & west_ghost;
  std::size_t i = 1;
  for (; i + 32 <= n; i += 32) {
    const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(south + i));
    const __m256i w = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + i - 1));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_and_si256(s, w));
  }
  for (; i < n; ++i) out[i] = south[i] & row[i - 1];
}

inline __m256i rotl64(__m256i x, int k) {
  return _mm256_or_si256(_mm256_slli_epi64(x, k), _mm256_srli_epi64(x, 64 - k));
}

void bernoulli_words_avx2(XoshiroLanes& lanes, std::uint32_t q16, std::size_t n_words, std::uint64_t* out) {
  if (q16 == 0 || q16 >= (1u << 16)) {
    detail::kScalarKernels.bernoulli_words(lanes, q16, n_words, out);
    return;
  }
  auto* st = lanes.s.data();
  __m256i s0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(st[0].data()));
  __m256i s1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(st[1].data()));
  __m256i s2 = _mm256_load_si256(reinterpret_cast<const __m256i*>(st[2].data()));
  __m256i s3 = _mm256_load_si256(reinterpret_cast<const __m256i*>(st[3].data()));
  const int low = std::countr_zero(q16);
  for (std::size_t base = 0; base < n_words; base += 4) {
    __m256i acc = _mm256_setzero_si256();
    for (int bit = low; bit < 16; ++bit) {
      const __m256i result = _mm256_add_epi64(rotl64(_mm256_add_epi64(s0, s3), 23), s0);
      const __m256i t = _mm256_slli_epi64(s1, 17);
      s2 = _mm256_xor_si256(s2, s0);
      s3 = _mm256_xor_si256(s3, s1);
      s1 = _mm256_xor_si256(s1, s2);
      s0 = _mm256_xor_si256(s0, s3);
      s2 = _mm256_xor_si256(s2, t);
      s3 = rotl64(s3, 45);
      acc = (q16 >> bit) & 1u ? _mm256_or_si256(acc, result) : _mm256_and_si256(acc, result);
    }
    if (base + 4 <= n_words) {
      _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + base), acc);
    } else {
      alignas(32) std::uint64_t tmp[4];
      _mm256_store_si256(reinterpret_cast<__m256i*>(tmp), acc);
      std::memcpy(out + base, tmp, (n_words - base) * sizeof(std::uint64_t));
    }
  }
  _mm256_store_si256(reinterpret_cast<__m256i*>(st[0].data()), s0);
  _mm256_store_si256(reinterpret_cast<__m256i*>(st[1].data()), s1);
  _mm256_store_si256(reinterpret_cast<__m256i*>(st[2].data()), s2);
  _mm256_store_si256(reinterpret_cast<__m256i*>(st[3].data()), s3);
}

bool front_step_avx2(const std::uint64_t* cur, const std::uint64_t* open, std::size_t n_words,
                     std::uint64_t* next) {
  __m256i any = _mm256_setzero_si256();
  std::uint64_t carry_word = 0;  // cur[w - 1] for the first word of the block
  std::size_t w = 0;
  for (; w + 4 <= n_words; w += 4) {
    const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(cur + w));
    // [prev, c0, c1, c2]
    __m256i prev = _mm256_permute4x64_epi64(c, _MM_SHUFFLE(2, 1, 0, 3));
    prev = _mm256_blend_epi32(prev, _mm256_set1_epi64x(static_cast<long long>(carry_word)), 0x03);
    const __m256i spread =
        _mm256_or_si256(_mm256_or_si256(c, _mm256_slli_epi64(c, 1)), _mm256_srli_epi64(prev, 63));
    const __m256i o = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(open + w));
    const __m256i nx = _mm256_and_si256(o, spread);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(next + w), nx);
    any = _mm256_or_si256(any, nx);
    carry_word = cur[w + 3];
  }
  std::uint64_t tail_any = 0;
  std::uint64_t carry = carry_word >> 63;
  for (; w < n_words; ++w) {
    const std::uint64_t c = cur[w];
    next[w] = open[w] & (c | (c << 1) | carry);
    carry = c >> 63;
    tail_any |= next[w];
  }
  return tail_any != 0 || !_mm256_testz_si256(any, any);
}

std::size_t count_ones_avx2(const std::uint8_t* data, std::size_t n) {
  __m256i sum = _mm256_setzero_si256();
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    sum = _mm256_add_epi64(sum, _mm256_sad_epu8(v, zero));
  }
  alignas(32) std::uint64_t parts[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(parts), sum);
  std::size_t total = static_cast<std::size_t>(parts[0] + parts[1] + parts[2] + parts[3]);
  for (; i < n; ++i) total += data[i];
  return total;
}

}  // namespace

namespace detail {
const KernelTable kAvx2Kernels{
    &bernoulli_row_avx2, &eligibility_row_avx2, &bernoulli_words_avx2,
    &front_step_avx2,    &count_ones_avx2,
};
}  // namespace detail

}  // namespace ne::simd
