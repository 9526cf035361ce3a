#include <gtest/gtest.h>

#include <memory>

#include "memctx/error.hpp"
#include "memctx/fov_retrieval.hpp"
#include "oracles/oracles.hpp"
#include "support/test_support.hpp"

using namespace memctx;
using testsupport::Rng;

namespace {

const Intrinsics kSquare{128, 128, 128, 128, 256, 256};
const GridId kSmall{4, 8, 1.0};

FovSet bits(std::initializer_list<std::size_t> on, GridId grid = kSmall) {
  FovSet s(grid);
  for (auto m : on) s.set(m);
  return s;
}

FovSet oracle_set(const CameraTrajectory& t, const SphereGrid& g) {
  const auto vis = oracle::video_visibility(testsupport::to_oracle(t),
                                            oracle::sphere_points(g.n_theta(), g.n_phi(), g.radius()));
  FovSet s(g.id());
  for (std::size_t m = 0; m < vis.size(); ++m)
    if (vis[m]) s.set(m);
  return s;
}

CacheEntry nvs_entry(std::uint64_t id, std::uint64_t seq, CameraTrajectory traj) {
  CacheEntry e;
  e.entry_id = id;
  e.created_seq = seq;
  e.task = Task::novel_view;
  e.latent_shape = {21, 60, 104, 16};
  e.key = std::move(traj);
  return e;
}

CacheSnapshot snapshot_of(std::vector<CacheEntry> entries, Task task = Task::novel_view) {
  return CacheSnapshot(std::make_shared<const std::vector<CacheEntry>>(std::move(entries)), task);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected memctx::Error";
  return ErrorKind::io;
}

}  // namespace

TEST(FrameFov, FiniteFrustumIsStrictSubset) {
  const auto grid = sample_sphere(36, 72, 1.0);
  const auto s = frame_fov({kSquare, Pose{}}, grid, Pose{});
  EXPECT_GT(s.count(), 0u);
  EXPECT_LT(s.count(), grid.size());
}

TEST(FrameFov, EmptyRasterGivesEmptySet) {
  const auto grid = sample_sphere(36, 72, 1.0);
  EXPECT_EQ(frame_fov({{1, 1, 0, 0, 0, 0}, Pose{}}, grid, Pose{}).count(), 0u);
}

TEST(FrameFov, AxisAlignedMatchesPointLoop) {
  const auto grid = sample_sphere(180, 360, 1.0);
  const auto s = frame_fov({kSquare, Pose{}}, grid, Pose{});
  oracle::Camera cam{128, 128, 128, 128, 256, 256, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}};
  const auto pts = oracle::sphere_points(180, 360, 1.0L);
  std::size_t expected = 0;
  for (std::size_t m = 0; m < pts.size(); ++m) {
    const bool v = oracle::visible(cam, pts[m]);
    expected += v;
    ASSERT_EQ(s.test(m), v) << m;
  }
  EXPECT_EQ(s.count(), expected);
}

TEST(FrameFov, RelativizesAgainstReference) {
  const auto grid = sample_sphere(36, 72, 1.0);
  const Pose turned{testsupport::rot_y(37), {0.1, 0.2, 0.3}};
  EXPECT_EQ(frame_fov({kSquare, turned}, grid, turned), frame_fov({kSquare, Pose{}}, grid, Pose{}));
}

TEST(VideoFov, SingleFrameEqualsFrameFov) {
  Rng rng(30);
  const auto grid = sample_sphere(36, 72, 1.0);
  const auto t = testsupport::random_trajectory(rng, 1);
  EXPECT_EQ(video_fov(t, grid), frame_fov(t.frames[0], grid, t.frames[0].pose));
}

TEST(VideoFov, DuplicateFramesAreIdempotent) {
  Rng rng(31);
  const auto grid = sample_sphere(36, 72, 1.0);
  auto t = testsupport::random_trajectory(rng, 5);
  auto dup = t;
  dup.frames.insert(dup.frames.begin() + 2, t.frames[3]);
  dup.frames.push_back(t.frames[1]);
  EXPECT_EQ(video_fov(t, grid), video_fov(dup, grid));
}

TEST(VideoFov, OrbitCoversEveryFrame) {
  const auto grid = sample_sphere(90, 180, 1.0);
  const auto orbit = testsupport::pan(81, 0, 4.5);
  const auto v = video_fov(orbit, grid);
  for (const auto& f : orbit.frames) {
    auto single = frame_fov(f, grid, orbit.frames.front().pose);
    EXPECT_GE(v.count(), single.count());
    single |= v;
    EXPECT_EQ(single, v);
  }
}

TEST(VideoFov, MonotoneUnderAppend) {
  Rng rng(32);
  const auto grid = sample_sphere(36, 72, 1.0);
  const auto t = testsupport::random_trajectory(rng, 12);
  CameraTrajectory prefix;
  FovSet previous(grid.id());
  for (const auto& f : t.frames) {
    prefix.frames.push_back(f);
    const auto now = video_fov(prefix, grid);
    auto merged = now;
    merged |= previous;
    EXPECT_EQ(merged, now);
    previous = now;
  }
}

TEST(VideoFov, MatchesOracle) {
  Rng rng(33);
  const auto grid = sample_sphere(36, 72, 1.0);
  for (int i = 0; i < 6; ++i) {
    const auto t = testsupport::random_trajectory(rng, 1 + 3 * i);
    EXPECT_EQ(video_fov(t, grid), oracle_set(t, grid));
  }
}

TEST(VideoFov, EmptyTrajectoryRejected) {
  const auto grid = sample_sphere(4, 8, 1.0);
  EXPECT_EQ(kind_of([&] { video_fov(CameraTrajectory{}, grid); }), ErrorKind::invalid_argument);
}

TEST(VideoFov, RadiusInvariantForCentredCameras) {
  Rng rng(34);
  const auto g1 = sample_sphere(36, 72, 1.0), g2 = sample_sphere(36, 72, 2.0);
  for (int i = 0; i < 10; ++i) {
    const auto t = testsupport::random_rotation_trajectory(rng, 6);
    EXPECT_EQ(video_fov(t, g1).words(), video_fov(t, g2).words());
  }
}

TEST(FovSet, UnionRequiresSameGrid) {
  FovSet a = bits({1}), b = bits({1}, GridId{4, 8, 2.0});
  EXPECT_EQ(kind_of([&] { a |= b; }), ErrorKind::invalid_grid);
  EXPECT_EQ(kind_of([&] { fov_score(a, b); }), ErrorKind::invalid_grid);
}

TEST(FovScore, Identical) {
  const auto a = bits({0, 3, 9, 31});
  const auto s = fov_score(a, a, 0.5);
  EXPECT_EQ(s.overlap, 1.0);
  EXPECT_EQ(s.contain, 1.0);
  EXPECT_EQ(s.weighted, 1.0);
}

TEST(FovScore, Disjoint) {
  const auto s = fov_score(bits({0, 1}), bits({2, 3}), 0.5);
  EXPECT_EQ(s.overlap, 0.0);
  EXPECT_EQ(s.contain, 0.0);
  EXPECT_EQ(s.weighted, 0.0);
}

TEST(FovScore, CountedExample) {
  // target 8 bits, candidate 12 bits, 6 shared.
  const auto t = bits({0, 1, 2, 3, 4, 5, 20, 21});
  const auto c = bits({0, 1, 2, 3, 4, 5, 10, 11, 12, 13, 14, 15});
  std::size_t inter = 0, uni = 0, tc = 0;
  for (std::size_t m = 0; m < t.size(); ++m) {
    inter += t.test(m) && c.test(m);
    uni += t.test(m) || c.test(m);
    tc += t.test(m);
  }
  ASSERT_EQ(inter, 6u);
  ASSERT_EQ(uni, 14u);
  ASSERT_EQ(tc, 8u);
  const auto s = fov_score(t, c, 0.5);
  EXPECT_DOUBLE_EQ(s.overlap, 6.0 / 14.0);
  EXPECT_DOUBLE_EQ(s.contain, 6.0 / 8.0);
  EXPECT_NEAR(s.weighted, 0.5 * (6.0 / 14.0) + 0.5 * (6.0 / 8.0), 1e-15);
}

TEST(FovScore, DefaultLambdaIsHalf) {
  EXPECT_EQ(kDefaultLambda, 0.5);
  EXPECT_EQ(fov_score(bits({1, 2}), bits({2})).lambda, 0.5);
}

TEST(FovScore, Errors) {
  EXPECT_EQ(kind_of([] { fov_score(bits({}), bits({1})); }), ErrorKind::degenerate_target);
  EXPECT_EQ(kind_of([] { fov_score(bits({1}), bits({1}), -0.1); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { fov_score(bits({1}), bits({1}), 1.5); }), ErrorKind::invalid_argument);
}

TEST(FovScore, EmptyCandidateScoresZero) {
  const auto s = fov_score(bits({1, 2}), bits({}), 0.3);
  EXPECT_EQ(s.overlap, 0.0);
  EXPECT_EQ(s.weighted, 0.0);
}

TEST(FovScore, AlgebraOnRandomSets) {
  Rng rng(35);
  std::uniform_real_distribution<double> unit(0, 1);
  const GridId g{9, 17, 1.0};
  for (int i = 0; i < 500; ++i) {
    FovSet a(g), b(g);
    const double da = unit(rng), db = unit(rng);
    for (std::size_t m = 0; m < a.size(); ++m) {
      if (unit(rng) < da) a.set(m);
      if (unit(rng) < db) b.set(m);
    }
    if (a.count() == 0 || b.count() == 0) continue;
    const double lambda = unit(rng);
    const auto ab = fov_score(a, b, lambda), ba = fov_score(b, a, lambda);
    EXPECT_EQ(ab.overlap, ba.overlap);
    EXPECT_GE(ab.contain, ab.overlap);
    for (double v : {ab.overlap, ab.contain, ab.weighted}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(ab.weighted, lambda * ab.overlap + (1 - lambda) * ab.contain, 1e-12);
  }
}

TEST(RankByFov, EmptyCache) {
  const auto grid = sample_sphere(18, 36, 1.0);
  EXPECT_TRUE(rank_by_fov(testsupport::pan(3, 0, 10), snapshot_of({}), 5, 0.5, grid).empty());
}

TEST(RankByFov, SelfMatch) {
  const auto grid = sample_sphere(36, 72, 1.0);
  const auto t = testsupport::pan(5, 0, 10);
  const auto out = rank_by_fov(t, snapshot_of({nvs_entry(1, 1, t)}), 3, 0.5, grid);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].entry_id, 1u);
  EXPECT_EQ(out[0].score.weighted, 1.0);
}

TEST(RankByFov, DegenerateTargetPropagates) {
  const auto grid = sample_sphere(18, 36, 1.0);
  const auto empty = testsupport::pan(2, 0, 10, {1, 1, 0, 0, 0, 0});
  EXPECT_EQ(kind_of([&] { rank_by_fov(empty, snapshot_of({}), 1, 0.5, grid); }), ErrorKind::degenerate_target);
}

TEST(RankByFov, SyntheticCandidatesOrdered) {
  const auto grid = sample_sphere(90, 180, 1.0);
  const auto target = testsupport::pan(5, 0, 10);
  // Absolute placement differs per candidate; only trajectory shape matters.
  const auto same_orbit = testsupport::pan(5, 200, 10);
  const auto adjacent = testsupport::pan(5, -30, 15);
  auto opposite = testsupport::pan(5, 60, 0);
  for (std::size_t i = 1; i < opposite.size(); ++i) opposite.frames[i].pose.rotation = testsupport::rot_y(240);

  const auto snap = snapshot_of({nvs_entry(1, 1, opposite), nvs_entry(2, 2, adjacent), nvs_entry(3, 3, same_orbit)});
  const auto out = rank_by_fov(target, snap, 3, 0.5, grid);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].entry_id, 3u);
  EXPECT_EQ(out[1].entry_id, 2u);
  EXPECT_EQ(out[2].entry_id, 1u);

  // Oracle scores give the same ordering and values.
  const auto pts = oracle::sphere_points(90, 180, 1.0L);
  const auto tv = oracle::video_visibility(testsupport::to_oracle(target), pts);
  std::map<std::uint64_t, long double> weighted;
  for (const auto& e : snap) {
    const auto s = oracle::set_scores(tv, oracle::video_visibility(testsupport::to_oracle(*e.trajectory()), pts));
    weighted[e.entry_id] = 0.5L * s.overlap + 0.5L * s.contain;
  }
  EXPECT_GT(weighted[3], weighted[2]);
  EXPECT_GT(weighted[2], weighted[1]);
  for (const auto& m : out) EXPECT_NEAR(m.score.weighted, static_cast<double>(weighted[m.entry_id]), 1e-12);
}

TEST(RankByFov, TiesPreferRecentThenLowerId) {
  const auto grid = sample_sphere(18, 36, 1.0);
  const auto t = testsupport::pan(3, 0, 10);
  const auto snap = snapshot_of({nvs_entry(4, 1, t), nvs_entry(2, 2, t), nvs_entry(7, 3, t), nvs_entry(5, 3, t)});
  const auto out = rank_by_fov(t, snap, 10, 0.5, grid);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].entry_id, 5u);
  EXPECT_EQ(out[1].entry_id, 7u);
  EXPECT_EQ(out[2].entry_id, 2u);
  EXPECT_EQ(out[3].entry_id, 4u);
}

TEST(RankByFov, TruncatesToK) {
  const auto grid = sample_sphere(18, 36, 1.0);
  std::vector<CacheEntry> entries;
  for (std::uint64_t i = 1; i <= 6; ++i) entries.push_back(nvs_entry(i, i, testsupport::pan(3, 0, 5.0 * i)));
  const auto snap = snapshot_of(entries);
  EXPECT_EQ(rank_by_fov(testsupport::pan(3, 0, 5), snap, 0, 0.5, grid).size(), 0u);
  EXPECT_EQ(rank_by_fov(testsupport::pan(3, 0, 5), snap, 4, 0.5, grid).size(), 4u);
  EXPECT_EQ(rank_by_fov(testsupport::pan(3, 0, 5), snap, 40, 0.5, grid).size(), 6u);
}

TEST(RankByFov, Deterministic) {
  Rng rng(36);
  const auto grid = sample_sphere(18, 36, 1.0);
  std::vector<CacheEntry> entries;
  for (std::uint64_t i = 1; i <= 8; ++i) entries.push_back(nvs_entry(i, i, testsupport::random_trajectory(rng, 4)));
  const auto snap = snapshot_of(entries);
  const auto target = testsupport::random_trajectory(rng, 4);
  const auto a = rank_by_fov(target, snap, 8, 0.5, grid), b = rank_by_fov(target, snap, 8, 0.5, grid);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].entry_id, b[i].entry_id);
    EXPECT_EQ(a[i].score.weighted, b[i].score.weighted);
  }
}

TEST(FovIndex, RefreshIsIncremental) {
  const auto t = testsupport::pan(3, 0, 10);
  FovIndex index(sample_sphere(18, 36, 1.0));
  index.refresh(snapshot_of({nvs_entry(1, 1, t)}));
  EXPECT_EQ(index.indexed(), 1u);
  const auto bigger = snapshot_of({nvs_entry(1, 1, t), nvs_entry(2, 2, t)});
  EXPECT_EQ(kind_of([&] { index.rank(video_fov(t, index.grid()), bigger, 2); }), ErrorKind::invalid_argument);
  index.refresh(bigger);
  EXPECT_EQ(index.indexed(), 2u);
  EXPECT_EQ(index.rank(video_fov(t, index.grid()), bigger, 2).size(), 2u);
}

TEST(FovIndex, RejectsEditCache) {
  CacheEntry e;
  e.entry_id = 1;
  e.task = Task::text_edit;
  e.latent_shape = {1, 1, 1, 1};
  e.key = SegmentDescriptor{{1.0, 0.0}, 1};
  FovIndex index(sample_sphere(4, 8, 1.0));
  EXPECT_EQ(kind_of([&] { index.refresh(snapshot_of({e}, Task::text_edit)); }), ErrorKind::task_mismatch);
}
