#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "northeast/counter_rng.hpp"
#include "northeast/simd/kernels.hpp"

namespace ne::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if defined(NORTHEAST_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  if (isa == Isa::Avx2) return __builtin_cpu_supports("avx2");
#endif
  return false;
}

Isa detected_isa() { return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("NORTHEAST_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return detected_isa();
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("ISA not available on this CPU/build: " + std::string(to_string(isa)));
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa) {
#if defined(NORTHEAST_HAVE_AVX2)
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return detail::kAvx2Kernels;
#endif
  (void)isa;
  return detail::kScalarKernels;
}

const KernelTable& kernels() { return kernels(active_isa()); }

XoshiroLanes XoshiroLanes::from_seed(std::uint64_t seed) {
  XoshiroLanes l;
  std::uint64_t sm = seed;
  for (int lane = 0; lane < 4; ++lane) {
    for (int word = 0; word < 4; ++word) l.s[word][lane] = rng::splitmix64(sm);
  }
  return l;
}

}  // namespace ne::simd
