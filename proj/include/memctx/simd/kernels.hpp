#pragma once

// Data-parallel inner loops used by retrieval, scoring and merging.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled in its own translation unit. The active table is chosen at
// first use from CPUID, and can be pinned with MEMCTX_SIMD=scalar|avx2|auto.
//
// Equivalence contract between variants:
//   mark_visible, popcount*, accumulate  bit-identical
//   dot                                  same value up to summation order

#include <span>
#include <string_view>

#include "memctx/simd/kernel_table.hpp"

namespace memctx::simd {

std::string_view to_string(Isa isa) noexcept;

bool isa_supported(Isa isa) noexcept;

// Kernel table for a specific ISA. Throws std::invalid_argument when the ISA
// is not compiled in or not supported by this CPU.
const Kernels& kernels_for(Isa isa);

// Active table (auto-detected unless overridden).
const Kernels& kernels() noexcept;
Isa active_isa() noexcept;

// Pins the active ISA for the whole process. Not synchronized with concurrent
// kernel calls; intended for process start-up and tests.
void set_active_isa(Isa isa);

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return kernels().dot(a.data(), b.data(), a.size());
}
inline void accumulate(std::span<double> dst, std::span<const double> src) noexcept {
  kernels().accumulate(dst.data(), src.data(), dst.size());
}

}  // namespace memctx::simd
