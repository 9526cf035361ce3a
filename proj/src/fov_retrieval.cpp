#include "memctx/fov_retrieval.hpp"

#include <algorithm>

#include "camera_internal.hpp"
#include "memctx/error.hpp"
#include "memctx/simd/kernels.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "fov_retrieval";

void require_same_grid(const FovSet& a, const FovSet& b) {
  if (!(a.grid() == b.grid()) || a.size() != b.size()) {
    throw Error(ErrorKind::invalid_grid, kModule,
                "FOV sets come from different grids (" + a.grid().to_string() + " vs " + b.grid().to_string() + ")");
  }
}

void mark_frame(FovSet& set, const CameraFrame& frame, const SphereGrid& grid, const Pose& ref) {
  if (!(set.grid() == grid.id())) {
    throw Error(ErrorKind::invalid_grid, kModule, "FOV set grid " + set.grid().to_string() +
                                                      " does not match sphere grid " + grid.id().to_string());
  }
  const Pose rel = relative_pose(frame.pose, ref);
  const auto camera = detail::visibility_camera(frame.intrinsics, rel);
  simd::kernels().mark_visible(grid.xs().data(), grid.ys().data(), grid.zs().data(), grid.size(), camera,
                               set.words().data());
}

}  // namespace

FovSet::FovSet(const GridId& grid)
    : grid_(grid), size_(static_cast<std::size_t>(grid.n_theta) * grid.n_phi), words_((size_ + 63) / 64, 0) {}

std::uint64_t FovSet::count() const noexcept { return simd::kernels().popcount(words_.data(), words_.size()); }

FovSet& FovSet::operator|=(const FovSet& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

FovSet frame_fov(const CameraFrame& frame, const SphereGrid& grid, const Pose& ref) {
  FovSet set(grid.id());
  mark_frame(set, frame, grid, ref);
  return set;
}

FovSet video_fov(const CameraTrajectory& traj, const SphereGrid& grid) {
  if (traj.empty()) throw Error(ErrorKind::invalid_argument, kModule, "video_fov needs a non-empty trajectory");
  FovSet set(grid.id());
  const Pose ref = traj.frames.front().pose;
  for (const auto& frame : traj.frames) mark_frame(set, frame, grid, ref);
  return set;
}

FovScore fov_score(const FovSet& target, const FovSet& candidate, double lambda) {
  require_same_grid(target, candidate);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, kModule, "lambda must lie in [0, 1]");
  }
  const auto& k = simd::kernels();
  const auto& a = target.words();
  const auto& b = candidate.words();
  const std::uint64_t target_count = k.popcount(a.data(), a.size());
  if (target_count == 0) {
    throw Error(ErrorKind::degenerate_target, kModule, "target FOV is empty; containment is undefined");
  }
  const std::uint64_t inter = k.popcount_and(a.data(), b.data(), a.size());
  const std::uint64_t uni = k.popcount_or(a.data(), b.data(), a.size());
  FovScore s;
  s.lambda = lambda;
  s.overlap = static_cast<double>(inter) / static_cast<double>(uni);
  s.contain = static_cast<double>(inter) / static_cast<double>(target_count);
  s.weighted = lambda * s.overlap + (1.0 - lambda) * s.contain;
  return s;
}

FovIndex::FovIndex(SphereGrid grid) : grid_(std::move(grid)) {}

void FovIndex::refresh(const CacheSnapshot& snapshot) {
  if (snapshot.task() && *snapshot.task() != Task::novel_view) {
    throw Error(ErrorKind::task_mismatch, kModule, "FOV retrieval needs a novel_view cache");
  }
  for (const auto& entry : snapshot) {
    if (sets_.contains(entry.entry_id)) continue;
    const auto* traj = entry.trajectory();
    if (!traj) throw Error(ErrorKind::task_mismatch, kModule, "cache entry without a trajectory key");
    sets_.emplace(entry.entry_id, std::make_shared<const FovSet>(video_fov(*traj, grid_)));
  }
}

std::vector<FovMatch> FovIndex::rank(const FovSet& target, const CacheSnapshot& snapshot, std::size_t k,
                                     double lambda) const {
  struct Scored {
    FovMatch match;
    std::uint64_t created_seq;
  };
  std::vector<Scored> scored;
  scored.reserve(snapshot.size());
  for (const auto& entry : snapshot) {
    const auto it = sets_.find(entry.entry_id);
    if (it == sets_.end()) {
      throw Error(ErrorKind::invalid_argument, kModule,
                  "entry " + std::to_string(entry.entry_id) + " is not indexed; call refresh() first");
    }
    scored.push_back({{entry.entry_id, fov_score(target, *it->second, lambda)}, entry.created_seq});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.match.score.weighted != y.match.score.weighted) return x.match.score.weighted > y.match.score.weighted;
    if (x.created_seq != y.created_seq) return x.created_seq > y.created_seq;
    return x.match.entry_id < y.match.entry_id;
  });
  std::vector<FovMatch> out;
  const std::size_t n = std::min(k, scored.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].match);
  return out;
}

std::vector<FovMatch> rank_by_fov(const CameraTrajectory& target, const CacheSnapshot& snapshot, std::size_t k,
                                  double lambda, const SphereGrid& grid) {
  FovIndex index(grid);
  index.refresh(snapshot);
  const FovSet target_set = video_fov(target, grid);
  if (target_set.count() == 0) {
    throw Error(ErrorKind::degenerate_target, kModule, "target FOV is empty; containment is undefined");
  }
  return index.rank(target_set, snapshot, k, lambda);
}

}  // namespace memctx
