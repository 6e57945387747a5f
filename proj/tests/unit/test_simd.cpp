#include <bit>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "northeast/counter_rng.hpp"
#include "northeast/event_fabric.hpp"
#include "northeast/simd/kernels.hpp"

using namespace ne;
using simd::Isa;

namespace {

std::vector<Isa> vector_isas() {
  std::vector<Isa> out;
  if (simd::isa_available(Isa::Avx2)) out.push_back(Isa::Avx2);
  return out;
}

std::uint64_t lcg(std::uint64_t& s) {
  s = s * 6364136223846793005ull + 1442695040888963407ull;
  return s;
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  // Random123 kat_vectors for philox4x32_10
  CHECK(rng::philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(rng::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(rng::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("bernoulli_row: vector variants equal scalar") {
  const auto& ref = simd::kernels(Isa::Scalar);
  for (Isa isa : vector_isas()) {
    const auto& k = simd::kernels(isa);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 64u, 333u}) {
      for (double p : {0.0, 0.2, 0.5, 0.8, 1.0}) {
        const auto key = rng::key_from_seed(0xDEADBEEF12345ull + n);
        simd::BernoulliRowArgs a{key.k0, key.k1, stream_tag(StreamDomain::Initial, 0), -17, 42,
                                 rng::bernoulli_threshold(p)};
        std::vector<std::uint8_t> x(n), y(n);
        ref.bernoulli_row(a, n, x.data());
        k.bernoulli_row(a, n, y.data());
        CHECK(x == y);
      }
    }
  }
}

TEST_CASE("bernoulli_row agrees with initial_bernoulli") {
  const auto key = rng::key_from_seed(77);
  const std::uint64_t thr = rng::bernoulli_threshold(0.3);
  simd::BernoulliRowArgs a{key.k0, key.k1, stream_tag(StreamDomain::Initial, 0), 5, -3, thr};
  std::vector<std::uint8_t> row(50);
  simd::kernels().bernoulli_row(a, row.size(), row.data());
  for (int i = 0; i < 50; ++i) CHECK(row[i] == initial_bernoulli(77, {5 + i, -3}, thr));
}

TEST_CASE("eligibility_row: vector variants equal scalar") {
  std::uint64_t s = 3;
  const auto& ref = simd::kernels(Isa::Scalar);
  for (Isa isa : vector_isas()) {
    for (std::size_t n : {1u, 2u, 31u, 32u, 33u, 65u, 200u}) {
      std::vector<std::uint8_t> south(n), row(n), a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        south[i] = (lcg(s) >> 40) & 1;
        row[i] = (lcg(s) >> 40) & 1;
      }
      for (std::uint8_t g : {0, 1}) {
        ref.eligibility_row(south.data(), row.data(), g, n, a.data());
        simd::kernels(isa).eligibility_row(south.data(), row.data(), g, n, b.data());
        CHECK(a == b);
        CHECK(a[0] == (south[0] & g));
      }
    }
  }
}

TEST_CASE("bernoulli_words: vector variants equal scalar, including the lane state") {
  for (Isa isa : vector_isas()) {
    for (std::uint32_t q : {0u, 1u, 2u, 12345u, 32768u, 46234u, 65535u, 65536u}) {
      for (std::size_t n : {1u, 3u, 4u, 5u, 17u}) {
        auto l1 = simd::XoshiroLanes::from_seed(q * 31 + n);
        auto l2 = l1;
        std::vector<std::uint64_t> a(n), b(n);
        simd::kernels(Isa::Scalar).bernoulli_words(l1, q, n, a.data());
        simd::kernels(isa).bernoulli_words(l2, q, n, b.data());
        CHECK(a == b);
        CHECK(l1.s == l2.s);
      }
    }
  }
}

TEST_CASE("bernoulli_words density matches q / 2^16") {
  auto lanes = simd::XoshiroLanes::from_seed(5);
  for (std::uint32_t q : {6554u, 32768u, 46234u}) {
    std::vector<std::uint64_t> w(4096);
    simd::kernels().bernoulli_words(lanes, q, w.size(), w.data());
    std::size_t ones = 0;
    for (auto v : w) ones += static_cast<std::size_t>(std::popcount(v));
    const double n = 64.0 * static_cast<double>(w.size());
    const double p = q / 65536.0;
    CHECK(std::abs(static_cast<double>(ones) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("front_step: vector variants equal scalar") {
  std::uint64_t s = 9;
  for (Isa isa : vector_isas()) {
    for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 13u}) {
      std::vector<std::uint64_t> cur(n), open(n), a(n), b(n);
      for (int trial = 0; trial < 20; ++trial) {
        for (std::size_t i = 0; i < n; ++i) {
          cur[i] = trial % 5 == 0 ? 0 : lcg(s);
          open[i] = lcg(s) | lcg(s);
        }
        const bool ra = simd::kernels(Isa::Scalar).front_step(cur.data(), open.data(), n, a.data());
        const bool rb = simd::kernels(isa).front_step(cur.data(), open.data(), n, b.data());
        CHECK(ra == rb);
        CHECK(a == b);
      }
    }
  }
}

TEST_CASE("front_step carries across words") {
  const std::uint64_t cur[2] = {std::uint64_t{1} << 63, 0};
  const std::uint64_t open[2] = {~0ull, ~0ull};
  std::uint64_t next[2];
  CHECK(simd::kernels(Isa::Scalar).front_step(cur, open, 2, next));
  CHECK(next[0] == std::uint64_t{1} << 63);
  CHECK(next[1] == 1u);
}

TEST_CASE("count_ones: vector variants equal scalar") {
  std::uint64_t s = 1;
  for (Isa isa : vector_isas()) {
    for (std::size_t n : {0u, 1u, 31u, 32u, 100u, 4099u}) {
      std::vector<std::uint8_t> v(n);
      for (auto& x : v) x = (lcg(s) >> 50) & 1;
      CHECK(simd::kernels(Isa::Scalar).count_ones(v.data(), n) == simd::kernels(isa).count_ones(v.data(), n));
    }
  }
}

TEST_CASE("dispatch can be forced") {
  const Isa before = simd::active_isa();
  simd::set_active_isa(Isa::Scalar);
  CHECK(simd::active_isa() == Isa::Scalar);
  CHECK(&simd::kernels() == &simd::kernels(Isa::Scalar));
  simd::set_active_isa(before);
}
