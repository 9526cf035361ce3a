// AVX2 kernels. This file is compiled with -mavx2 and must only include
// headers without inline definitions shared with other translation units.

#include <immintrin.h>

#include "memctx/simd/kernel_table.hpp"

namespace memctx::simd::detail {
namespace {

bool visible_tail(double x, double y, double z, const VisibilityCamera& c) noexcept {
  const double dx = x - c.center[0];
  const double dy = y - c.center[1];
  const double dz = z - c.center[2];
  const double zc = c.rotation[6] * dx + c.rotation[7] * dy + c.rotation[8] * dz;
  if (!(zc > 0.0)) return false;
  const double xc = c.rotation[0] * dx + c.rotation[1] * dy + c.rotation[2] * dz;
  const double yc = c.rotation[3] * dx + c.rotation[4] * dy + c.rotation[5] * dz;
  const double u = c.fx * (xc / zc) + c.cx;
  const double v = c.fy * (yc / zc) + c.cy;
  return u >= 0.0 && u < c.width && v >= 0.0 && v < c.height;
}

inline __m256d row(__m256d a, __m256d dx, __m256d b, __m256d dy, __m256d c, __m256d dz) noexcept {
  return _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(a, dx), _mm256_mul_pd(b, dy)),
                       _mm256_mul_pd(c, dz));
}

void mark_visible_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                       const VisibilityCamera& c, std::uint64_t* words) noexcept {
  const __m256d r0 = _mm256_set1_pd(c.rotation[0]);
  const __m256d r1 = _mm256_set1_pd(c.rotation[1]);
  const __m256d r2 = _mm256_set1_pd(c.rotation[2]);
  const __m256d r3 = _mm256_set1_pd(c.rotation[3]);
  const __m256d r4 = _mm256_set1_pd(c.rotation[4]);
  const __m256d r5 = _mm256_set1_pd(c.rotation[5]);
  const __m256d r6 = _mm256_set1_pd(c.rotation[6]);
  const __m256d r7 = _mm256_set1_pd(c.rotation[7]);
  const __m256d r8 = _mm256_set1_pd(c.rotation[8]);
  const __m256d tx = _mm256_set1_pd(c.center[0]);
  const __m256d ty = _mm256_set1_pd(c.center[1]);
  const __m256d tz = _mm256_set1_pd(c.center[2]);
  const __m256d fx = _mm256_set1_pd(c.fx);
  const __m256d fy = _mm256_set1_pd(c.fy);
  const __m256d cx = _mm256_set1_pd(c.cx);
  const __m256d cy = _mm256_set1_pd(c.cy);
  const __m256d width = _mm256_set1_pd(c.width);
  const __m256d height = _mm256_set1_pd(c.height);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), tx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), ty);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), tz);
    const __m256d zc = row(r6, dx, r7, dy, r8, dz);
    const __m256d in_front = _mm256_cmp_pd(zc, zero, _CMP_GT_OQ);
    if (_mm256_movemask_pd(in_front) == 0) continue;
    const __m256d xc = row(r0, dx, r1, dy, r2, dz);
    const __m256d yc = row(r3, dx, r4, dy, r5, dz);
    const __m256d u = _mm256_add_pd(_mm256_mul_pd(fx, _mm256_div_pd(xc, zc)), cx);
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(fy, _mm256_div_pd(yc, zc)), cy);
    __m256d ok = _mm256_and_pd(in_front, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(u, width, _CMP_LT_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(v, height, _CMP_LT_OQ));
    const auto mask = static_cast<std::uint64_t>(_mm256_movemask_pd(ok));
    // i is a multiple of 4, so the 4 lane bits never straddle a word.
    words[i >> 6] |= mask << (i & 63);
  }
  for (; i < n; ++i) {
    if (visible_tail(xs[i], ys[i], zs[i], c)) words[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

// Nibble-table popcount over 256-bit lanes, accumulated per 64-bit lane.
inline __m256i popcount_lanes(__m256i v) noexcept {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  const __m256i counts = _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
  return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

inline std::uint64_t horizontal_sum(__m256i acc) noexcept {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

enum class Combine { none, both, either };

template <Combine op>
std::uint64_t popcount_impl(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    if constexpr (op == Combine::both) {
      v = _mm256_and_si256(v, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    } else if constexpr (op == Combine::either) {
      v = _mm256_or_si256(v, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    }
    acc = _mm256_add_epi64(acc, popcount_lanes(v));
  }
  std::uint64_t total = horizontal_sum(acc);
  for (; i < n; ++i) {
    std::uint64_t w = a[i];
    if constexpr (op == Combine::both) w &= b[i];
    if constexpr (op == Combine::either) w |= b[i];
    total += static_cast<std::uint64_t>(__builtin_popcountll(w));
  }
  return total;
}

std::uint64_t popcount_avx2(const std::uint64_t* a, std::size_t n) noexcept {
  return popcount_impl<Combine::none>(a, nullptr, n);
}
std::uint64_t popcount_and_avx2(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
  return popcount_impl<Combine::both>(a, b, n);
}
std::uint64_t popcount_or_avx2(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
  return popcount_impl<Combine::either>(a, b, n);
}

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void accumulate_avx2(double* dst, const double* src, std::size_t n) noexcept {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
  }
  for (; i < n; ++i) dst[i] += src[i];
}

}  // namespace

const Kernels avx2_kernels{
    Isa::avx2,        mark_visible_avx2, popcount_avx2,  popcount_and_avx2,
    popcount_or_avx2, dot_avx2,          accumulate_avx2,
};

}  // namespace memctx::simd::detail
