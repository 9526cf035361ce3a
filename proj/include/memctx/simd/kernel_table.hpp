#pragma once

// Plain kernel-table types. Kept free of inline functions so the ISA-specific
// translation units can include it without emitting shared inline code.

#include <cstddef>
#include <cstdint>

namespace memctx::simd {

enum class Isa { scalar, avx2 };

// Flattened world->camera pinhole camera for the visibility kernel.
// A point p is visible iff z_c > 0 and the pixel lies in [0,width)x[0,height)
// where x_c = R (p - t) and pixel = (fx * x_c/z_c + cx, fy * y_c/z_c + cy).
struct VisibilityCamera {
  double rotation[9];  // row-major
  double center[3];
  double fx, fy, cx, cy;
  double width, height;
};

struct Kernels {
  Isa isa;

  // ORs bit i of `words` for every visible point i in [0, n). Points are
  // given structure-of-arrays.
  void (*mark_visible)(const double* xs, const double* ys, const double* zs, std::size_t n,
                       const VisibilityCamera& camera, std::uint64_t* words) noexcept;

  std::uint64_t (*popcount)(const std::uint64_t* a, std::size_t n_words) noexcept;
  std::uint64_t (*popcount_and)(const std::uint64_t* a, const std::uint64_t* b,
                                std::size_t n_words) noexcept;
  std::uint64_t (*popcount_or)(const std::uint64_t* a, const std::uint64_t* b,
                               std::size_t n_words) noexcept;

  double (*dot)(const double* a, const double* b, std::size_t n) noexcept;

  // dst[i] += src[i]
  void (*accumulate)(double* dst, const double* src, std::size_t n) noexcept;
};

namespace detail {

// Per-ISA tables, defined in the kernel translation units.
extern const Kernels scalar_kernels;
#if defined(MEMCTX_HAVE_AVX2)
extern const Kernels avx2_kernels;
#endif

}  // namespace detail
}  // namespace memctx::simd
