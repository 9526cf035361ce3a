#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "memctx/simd/kernels.hpp"

namespace memctx::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(MEMCTX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Kernels* detect() noexcept {
  const char* env = std::getenv("MEMCTX_SIMD");
  const std::string requested = env ? env : "auto";
  if (requested == "scalar") return &detail::scalar_kernels;
#if defined(MEMCTX_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_kernels;
#endif
  return &detail::scalar_kernels;
}

std::atomic<const Kernels*>& active() noexcept {
  static std::atomic<const Kernels*> table{detect()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return cpu_has_avx2();
  }
  return false;
}

const Kernels& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("SIMD ISA not available: " + std::string(to_string(isa)));
  }
#if defined(MEMCTX_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_kernels;
#endif
  return detail::scalar_kernels;
}

const Kernels& kernels() noexcept { return *active().load(std::memory_order_acquire); }

Isa active_isa() noexcept { return kernels().isa; }

void set_active_isa(Isa isa) { active().store(&kernels_for(isa), std::memory_order_release); }

}  // namespace memctx::simd
