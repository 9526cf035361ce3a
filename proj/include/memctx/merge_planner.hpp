#pragma once

// Adaptive token merging plans for low-responsiveness conditioning frames.
//
// The learned convolutional merge operator is replaced by deterministic mean
// pooling: a frame of N_t tokens becomes ceil(N_t / r) tokens of the same
// width, each the mean of a contiguous group. Token counts, plans and cost
// accounting are unaffected by the substitution.

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memctx/responsiveness.hpp"
#include "memctx/token_budget.hpp"

namespace memctx {

// How r_base + r_slope * (n - 1) is read: as the token-count divisor r, or as
// the fraction of tokens kept (r = 1 / value).
enum class RConvention { divisor, kept_fraction };

std::string_view to_string(RConvention c) noexcept;

struct MergePolicy {
  double fraction_low = 0.5;
  // No published constants; defaults chosen so r grows with memory size.
  double r_base = 1.5;
  double r_slope = 0.25;
  RConvention convention = RConvention::divisor;
  bool discard = false;  // comparison baseline: drop selected frames instead of merging

  // r for n memory videos (n < 1 is treated as 1). Throws
  // Error(invalid_argument) when the resulting r is below 1.
  double reduction_factor(std::size_t n_memory_videos) const;

  friend bool operator==(const MergePolicy&, const MergePolicy&) = default;
};

inline const std::vector<std::uint32_t> kDefaultBlockPoints{10, 20};

// ceil(n / r), at least 1.
std::uint64_t merged_token_count(std::uint64_t n, double r);

// The floor(fraction_low * T) lowest-scoring frames not in `protected_frames`
// (fewer if not enough are unprotected), ascending. Ties: lower index first.
std::vector<std::uint32_t> select_frames(const ResponsivenessVector& scores, const MergePolicy& policy,
                                         const std::set<std::uint32_t>& protected_frames = {});

struct VideoMergePlan {
  std::size_t video = 0;  // index into TokenAllocation::per_video
  std::string label;
  std::uint64_t tokens_per_frame = 0;
  std::uint64_t merged_tokens_per_frame = 0;  // after one application
  std::vector<std::uint32_t> frames;
  std::uint64_t pre_tokens = 0;
  std::uint64_t post_tokens = 0;
};

struct MergePlan {
  std::vector<std::uint32_t> block_points;  // 1-based; merging happens before these blocks
  double reduction = 1.0;                   // r
  bool discard = false;
  std::vector<VideoMergePlan> videos;       // conditioning videos only
  std::uint64_t pre_tokens = 0;             // whole sequence, before merging
  std::uint64_t post_tokens = 0;            // whole sequence, after one merge
  // Tokens entering blocks [1, p1), [p1, p2), ... with the merge re-applied
  // to the selected frames at each block point.
  std::vector<std::uint64_t> stage_tokens;
  // 1 - cost(post) / cost(pre) at a merged block.
  double merged_block_reduction = 0.0;
  // Same ratio summed over every block of the cost model's schedule.
  double model_reduction = 0.0;
  CostModel cost_model;
};

// per_video_scores aligns with the conditioning videos of `allocation` (user
// input, then memory by rank); each must score exactly token_frames() frames.
// Target-video tokens are never merged.
MergePlan plan(const TokenAllocation& allocation, const std::vector<ResponsivenessVector>& per_video_scores,
               const MergePolicy& policy = {}, const std::vector<std::uint32_t>& block_points = kDefaultBlockPoints);

// Mean-pools n_tokens x dim row-major tokens into ceil(n_tokens / r) groups
// of near-equal contiguous size (larger groups first).
std::vector<double> apply_merge(std::span<const double> tokens, std::size_t n_tokens, std::size_t dim, double r);

}  // namespace memctx
