#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "memctx/camera_geometry.hpp"
#include "memctx/fov_retrieval.hpp"
#include "memctx/simd/kernels.hpp"
#include "support/test_support.hpp"

using namespace memctx;
using simd::Isa;

namespace {

const simd::Kernels& scalar() { return simd::kernels_for(Isa::scalar); }

#define REQUIRE_AVX2()                                                  \
  if (!simd::isa_supported(Isa::avx2)) GTEST_SKIP() << "no AVX2 on this CPU"

std::vector<std::uint64_t> random_words(testsupport::Rng& rng, std::size_t n, double density) {
  std::bernoulli_distribution bit(density);
  std::vector<std::uint64_t> w(n, 0);
  for (auto& x : w)
    for (int b = 0; b < 64; ++b)
      if (bit(rng)) x |= std::uint64_t{1} << b;
  return w;
}

simd::VisibilityCamera camera_of(const CameraFrame& f) {
  simd::VisibilityCamera c{};
  for (int i = 0; i < 9; ++i) c.rotation[i] = f.pose.rotation[i];
  for (int i = 0; i < 3; ++i) c.center[i] = f.pose.translation[i];
  c.fx = f.intrinsics.fx;
  c.fy = f.intrinsics.fy;
  c.cx = f.intrinsics.cx;
  c.cy = f.intrinsics.cy;
  c.width = f.intrinsics.width;
  c.height = f.intrinsics.height;
  return c;
}

class IsaGuard {
 public:
  IsaGuard() : saved_(simd::active_isa()) {}
  ~IsaGuard() { simd::set_active_isa(saved_); }

 private:
  Isa saved_;
};

}  // namespace

TEST(SimdDispatch, ScalarAlwaysAvailable) {
  EXPECT_TRUE(simd::isa_supported(Isa::scalar));
  EXPECT_EQ(scalar().isa, Isa::scalar);
  EXPECT_EQ(simd::to_string(Isa::avx2), "avx2");
}

TEST(SimdDispatch, PinAndRestore) {
  IsaGuard guard;
  simd::set_active_isa(Isa::scalar);
  EXPECT_EQ(simd::active_isa(), Isa::scalar);
  if (simd::isa_supported(Isa::avx2)) {
    simd::set_active_isa(Isa::avx2);
    EXPECT_EQ(simd::active_isa(), Isa::avx2);
  } else {
    EXPECT_THROW(simd::set_active_isa(Isa::avx2), std::invalid_argument);
  }
}

TEST(ScalarKernels, PopcountsMatchStd) {
  testsupport::Rng rng(20);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1013u}) {
    const auto a = random_words(rng, n, 0.3), b = random_words(rng, n, 0.6);
    std::uint64_t pa = 0, pand = 0, por = 0;
    for (std::size_t i = 0; i < n; ++i) {
      pa += std::popcount(a[i]);
      pand += std::popcount(a[i] & b[i]);
      por += std::popcount(a[i] | b[i]);
    }
    EXPECT_EQ(scalar().popcount(a.data(), n), pa);
    EXPECT_EQ(scalar().popcount_and(a.data(), b.data(), n), pand);
    EXPECT_EQ(scalar().popcount_or(a.data(), b.data(), n), por);
  }
}

TEST(ScalarKernels, MarkVisibleMatchesPredicate) {
  testsupport::Rng rng(21);
  const auto grid = sample_sphere(18, 36, 1.0);
  for (int i = 0; i < 20; ++i) {
    const CameraFrame f{testsupport::random_intrinsics(rng), testsupport::random_pose(rng, 0.3)};
    std::vector<std::uint64_t> words((grid.size() + 63) / 64, 0);
    scalar().mark_visible(grid.xs().data(), grid.ys().data(), grid.zs().data(), grid.size(), camera_of(f), words.data());
    for (std::size_t m = 0; m < grid.size(); ++m) {
      EXPECT_EQ(((words[m / 64] >> (m % 64)) & 1u) != 0, in_fov(grid.point(m), f.intrinsics, f.pose)) << m;
    }
  }
}

TEST(SimdEquivalence, Popcounts) {
  REQUIRE_AVX2();
  const auto& v = simd::kernels_for(Isa::avx2);
  testsupport::Rng rng(22);
  for (std::size_t n = 0; n < 70; ++n) {
    for (double density : {0.0, 0.05, 0.5, 1.0}) {
      const auto a = random_words(rng, n, density), b = random_words(rng, n, 1.0 - density / 2);
      EXPECT_EQ(v.popcount(a.data(), n), scalar().popcount(a.data(), n)) << n;
      EXPECT_EQ(v.popcount_and(a.data(), b.data(), n), scalar().popcount_and(a.data(), b.data(), n)) << n;
      EXPECT_EQ(v.popcount_or(a.data(), b.data(), n), scalar().popcount_or(a.data(), b.data(), n)) << n;
    }
  }
  const auto big = random_words(rng, 100000, 0.5);
  EXPECT_EQ(v.popcount(big.data(), big.size()), scalar().popcount(big.data(), big.size()));
}

TEST(SimdEquivalence, MarkVisibleBitIdentical) {
  REQUIRE_AVX2();
  const auto& v = simd::kernels_for(Isa::avx2);
  testsupport::Rng rng(23);
  for (auto [nt, np] : {std::pair{1u, 1u}, {3u, 5u}, {36u, 72u}, {61u, 67u}, {180u, 360u}}) {
    const auto grid = sample_sphere(nt, np, 1.0);
    const std::size_t n_words = (grid.size() + 63) / 64;
    for (int i = 0; i < 8; ++i) {
      const CameraFrame f{testsupport::random_intrinsics(rng), testsupport::random_pose(rng, 0.4)};
      // Pre-seed so the kernels must OR rather than overwrite.
      auto a = random_words(rng, n_words, 0.02);
      auto b = a;
      scalar().mark_visible(grid.xs().data(), grid.ys().data(), grid.zs().data(), grid.size(), camera_of(f), a.data());
      v.mark_visible(grid.xs().data(), grid.ys().data(), grid.zs().data(), grid.size(), camera_of(f), b.data());
      EXPECT_EQ(a, b) << nt << "x" << np;
    }
  }
}

TEST(SimdEquivalence, MarkVisiblePartialCounts) {
  REQUIRE_AVX2();
  const auto& v = simd::kernels_for(Isa::avx2);
  const auto grid = sample_sphere(12, 12, 1.0);
  const CameraFrame f{{40, 40, 64, 64, 128, 128}, {testsupport::rot_y(90), {0, 0, 0}}};
  for (std::size_t n = 0; n <= grid.size(); ++n) {
    std::vector<std::uint64_t> a(3, 0), b(3, 0);
    scalar().mark_visible(grid.xs().data(), grid.ys().data(), grid.zs().data(), n, camera_of(f), a.data());
    v.mark_visible(grid.xs().data(), grid.ys().data(), grid.zs().data(), n, camera_of(f), b.data());
    EXPECT_EQ(a, b) << n;
  }
}

TEST(SimdEquivalence, BoundaryPointsAgree) {
  REQUIRE_AVX2();
  const auto& v = simd::kernels_for(Isa::avx2);
  // Points placed to hit u = 0, u = width, v = 0, v = height and zc = 0 exactly.
  const std::vector<double> xs{-1, 1, 0, 0, 0, 0.5, -0.5, 0.25, 1, -1, 0, 0};
  const std::vector<double> ys{0, 0, -1, 1, 0, 0.5, -0.5, 0.25, 1, -1, 0, 0};
  const std::vector<double> zs{1, 1, 1, 1, 0, 1, 1, -1, 2, 2, 1e-300, -0.0};
  simd::VisibilityCamera c{{1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 128, 128, 128, 128, 256, 256};
  std::uint64_t a = 0, b = 0;
  scalar().mark_visible(xs.data(), ys.data(), zs.data(), xs.size(), c, &a);
  v.mark_visible(xs.data(), ys.data(), zs.data(), xs.size(), c, &b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a & 0b11, 0b01u);  // u = 0 in, u = width out
}

TEST(SimdEquivalence, AccumulateBitIdentical) {
  REQUIRE_AVX2();
  const auto& v = simd::kernels_for(Isa::avx2);
  testsupport::Rng rng(24);
  std::normal_distribution<double> n(0, 100);
  for (std::size_t len = 0; len < 40; ++len) {
    std::vector<double> src(len), a(len), b(len);
    for (std::size_t i = 0; i < len; ++i) src[i] = n(rng), a[i] = b[i] = n(rng);
    scalar().accumulate(a.data(), src.data(), len);
    v.accumulate(b.data(), src.data(), len);
    EXPECT_EQ(a, b);
  }
}

TEST(SimdEquivalence, DotWithinRoundoff) {
  REQUIRE_AVX2();
  const auto& v = simd::kernels_for(Isa::avx2);
  testsupport::Rng rng(25);
  std::normal_distribution<double> n(0, 1);
  for (std::size_t len : {0u, 1u, 2u, 3u, 7u, 8u, 9u, 16u, 31u, 384u, 1000u}) {
    std::vector<double> a(len), b(len);
    double abs_sum = 0;
    for (std::size_t i = 0; i < len; ++i) a[i] = n(rng), b[i] = n(rng), abs_sum += std::abs(a[i] * b[i]);
    const double s = scalar().dot(a.data(), b.data(), len), w = v.dot(a.data(), b.data(), len);
    EXPECT_NEAR(s, w, 4 * len * 1.2e-16 * abs_sum + 1e-300) << len;
  }
}

TEST(SimdEquivalence, VideoFovIdenticalUnderEitherIsa) {
  REQUIRE_AVX2();
  IsaGuard guard;
  testsupport::Rng rng(26);
  const auto grid = sample_sphere(36, 72, 1.0);
  for (int i = 0; i < 10; ++i) {
    const auto traj = testsupport::random_trajectory(rng, 1 + i);
    simd::set_active_isa(Isa::scalar);
    const auto a = video_fov(traj, grid);
    simd::set_active_isa(Isa::avx2);
    const auto b = video_fov(traj, grid);
    EXPECT_EQ(a, b);
  }
}
