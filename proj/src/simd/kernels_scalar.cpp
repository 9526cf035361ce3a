#include <bit>

#include "memctx/simd/kernel_table.hpp"
#include "visibility.hpp"

namespace memctx::simd::detail {
namespace {

void mark_visible_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                         const VisibilityCamera& camera, std::uint64_t* words) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    if (visible(xs[i], ys[i], zs[i], camera)) {
      words[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
  }
}

std::uint64_t popcount_scalar(const std::uint64_t* a, std::size_t n_words) noexcept {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n_words; ++i) total += std::popcount(a[i]);
  return total;
}

std::uint64_t popcount_and_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                  std::size_t n_words) noexcept {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n_words; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

std::uint64_t popcount_or_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                 std::size_t n_words) noexcept {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n_words; ++i) total += std::popcount(a[i] | b[i]);
  return total;
}

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void accumulate_scalar(double* dst, const double* src, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace

const Kernels scalar_kernels{
    Isa::scalar,        mark_visible_scalar, popcount_scalar, popcount_and_scalar,
    popcount_or_scalar, dot_scalar,          accumulate_scalar,
};

}  // namespace memctx::simd::detail
