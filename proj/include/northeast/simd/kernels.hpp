#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and an AVX2
// variant; the variant is picked once at startup from CPUID and can be forced
// with NORTHEAST_SIMD=scalar|avx2. Variants are bit-identical by contract and
// tests/unit/test_simd.cpp checks that.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ne::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Widest ISA this CPU (and this build) supports.
Isa detected_isa();
bool isa_available(Isa isa);

/// Currently selected ISA.
Isa active_isa();
/// Force an ISA; throws std::invalid_argument if unavailable.
void set_active_isa(Isa isa);

/// Four interleaved xoshiro256++ streams, stored lane-major by state word so
/// one AVX2 register holds word j of all four lanes.
struct XoshiroLanes {
  alignas(32) std::array<std::array<std::uint64_t, 4>, 4> s{};

  static XoshiroLanes from_seed(std::uint64_t seed);
};

/// Philox-keyed Bernoulli draws for one row of sites: out[i] = 1 iff the
/// 53-bit value for site (x0 + i, y) is below `threshold`.
struct BernoulliRowArgs {
  std::uint32_t key0 = 0;
  std::uint32_t key1 = 0;
  std::uint32_t tag = 0;  // fourth counter word
  std::int32_t x0 = 0;
  std::int32_t y = 0;
  std::uint64_t threshold = 0;
};

struct KernelTable {
  void (*bernoulli_row)(const BernoulliRowArgs& args, std::size_t n, std::uint8_t* out);

  /// out[i] = south[i] & (i == 0 ? west_ghost : row[i - 1]).
  void (*eligibility_row)(const std::uint8_t* south, const std::uint8_t* row, std::uint8_t west_ghost,
                          std::size_t n, std::uint8_t* out);

  /// n_words of Bernoulli(q / 2^16) bits. Draws come in rounds of four words
  /// (one per lane); a partial last round still advances every lane.
  void (*bernoulli_words)(XoshiroLanes& lanes, std::uint32_t q16, std::size_t n_words, std::uint64_t* out);

  /// One generation of oriented site percolation on a bit row:
  /// next[w] = open[w] & (cur[w] | cur[w] << 1 | carry from word w-1).
  /// Returns true if any bit of next is set.
  bool (*front_step)(const std::uint64_t* cur, const std::uint64_t* open, std::size_t n_words,
                     std::uint64_t* next);

  /// Number of set bytes (values are 0/1).
  std::size_t (*count_ones)(const std::uint8_t* data, std::size_t n);
};

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(NORTHEAST_HAVE_AVX2)
extern const KernelTable kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace ne::simd
