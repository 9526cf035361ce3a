#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "memctx/camera_geometry.hpp"
#include "memctx/memory_cache.hpp"

namespace memctx {

// Visibility footprint on a sphere grid: bit m set iff sample m is visible.
class FovSet {
 public:
  FovSet() = default;
  explicit FovSet(const GridId& grid);

  const GridId& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t m) const noexcept { return (words_[m >> 6] >> (m & 63)) & 1u; }
  void set(std::size_t m) noexcept { words_[m >> 6] |= std::uint64_t{1} << (m & 63); }
  std::uint64_t count() const noexcept;

  // In-place union; throws Error(invalid_grid) when grids differ.
  FovSet& operator|=(const FovSet& other);

  const std::vector<std::uint64_t>& words() const noexcept { return words_; }
  std::vector<std::uint64_t>& words() noexcept { return words_; }

  friend bool operator==(const FovSet&, const FovSet&) = default;

 private:
  GridId grid_;
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct FovScore {
  double overlap = 0.0;  // |A ∩ B| / |A ∪ B|
  double contain = 0.0;  // |A ∩ B| / |A|
  double weighted = 0.0;  // lambda * overlap + (1 - lambda) * contain
  double lambda = 0.5;
};

inline constexpr double kDefaultLambda = 0.5;

// Visible samples of one frame after relativizing its pose against `ref`.
FovSet frame_fov(const CameraFrame& frame, const SphereGrid& grid, const Pose& ref);

// Union of frame_fov over the trajectory, every frame relative to frame 0.
FovSet video_fov(const CameraTrajectory& traj, const SphereGrid& grid);

// Throws Error(invalid_grid) for mismatched grids, Error(degenerate_target)
// when the target set is empty, Error(invalid_argument) for lambda outside [0,1].
FovScore fov_score(const FovSet& target, const FovSet& candidate, double lambda = kDefaultLambda);

struct FovMatch {
  std::uint64_t entry_id = 0;
  FovScore score;
};

// Per-entry FovSets of a novel-view cache, computed once per grid. refresh()
// computes only entries not seen before; rank() is const and may be called
// concurrently.
class FovIndex {
 public:
  explicit FovIndex(SphereGrid grid);

  const SphereGrid& grid() const noexcept { return grid_; }

  // Adds FovSets for new entries of `snapshot`. Throws Error(task_mismatch)
  // for a text-edit cache.
  void refresh(const CacheSnapshot& snapshot);

  // Ranks the entries of `snapshot` (all must be indexed) by weighted score,
  // descending; ties go to the most recent insertion, then lower entry_id.
  std::vector<FovMatch> rank(const FovSet& target, const CacheSnapshot& snapshot, std::size_t k,
                             double lambda = kDefaultLambda) const;

  std::size_t indexed() const noexcept { return sets_.size(); }

 private:
  SphereGrid grid_;
  std::map<std::uint64_t, std::shared_ptr<const FovSet>> sets_;
};

// One-shot retrieval: builds the index for `snapshot` and ranks it.
std::vector<FovMatch> rank_by_fov(const CameraTrajectory& target, const CacheSnapshot& snapshot, std::size_t k,
                                  double lambda, const SphereGrid& grid);

}  // namespace memctx
