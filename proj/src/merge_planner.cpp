#include "memctx/merge_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "memctx/error.hpp"
#include "memctx/simd/kernels.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "merge_planner";

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorKind::invalid_argument, kModule, why); }

}  // namespace

std::string_view to_string(RConvention c) noexcept {
  return c == RConvention::divisor ? "divisor" : "kept-fraction";
}

double MergePolicy::reduction_factor(std::size_t n_memory_videos) const {
  const double n = static_cast<double>(std::max<std::size_t>(n_memory_videos, 1));
  const double value = r_base + r_slope * (n - 1.0);
  double r = value;
  if (convention == RConvention::kept_fraction) {
    if (!(value > 0.0 && value <= 1.0)) invalid("kept fraction must lie in (0, 1], got " + std::to_string(value));
    r = 1.0 / value;
  }
  if (!(r >= 1.0) || !std::isfinite(r)) invalid("reduction factor r must be >= 1, got " + std::to_string(r));
  return r;
}

std::uint64_t merged_token_count(std::uint64_t n, double r) {
  if (!(r >= 1.0)) invalid("reduction factor r must be >= 1");
  const double q = static_cast<double>(n) / r;
  // Snap quotients that are integral up to rounding, e.g. 30 / (1 / 0.1).
  const double nearest = std::round(q);
  const double groups = std::abs(q - nearest) <= 1e-9 * std::max(1.0, q) ? nearest : std::ceil(q);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(groups));
}

std::vector<std::uint32_t> select_frames(const ResponsivenessVector& scores, const MergePolicy& policy,
                                         const std::set<std::uint32_t>& protected_frames) {
  if (!(policy.fraction_low >= 0.0 && policy.fraction_low <= 1.0)) invalid("fraction_low must lie in [0, 1]");
  const std::size_t total = scores.frame_count();
  for (auto p : protected_frames) {
    if (p >= total) invalid("protected frame " + std::to_string(p) + " out of range");
  }
  const auto quota = static_cast<std::size_t>(std::floor(policy.fraction_low * static_cast<double>(total)));
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t t = 0; t < total; ++t) {
    if (!protected_frames.contains(t)) candidates.push_back(t);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores.scores[a] < scores.scores[b]; });
  candidates.resize(std::min(quota, candidates.size()));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

MergePlan plan(const TokenAllocation& allocation, const std::vector<ResponsivenessVector>& per_video_scores,
               const MergePolicy& policy, const std::vector<std::uint32_t>& block_points) {
  std::vector<std::size_t> conditioning;
  std::size_t n_memory = 0;
  for (std::size_t i = 0; i < allocation.per_video.size(); ++i) {
    const auto role = allocation.per_video[i].role;
    if (role == VideoRole::target) continue;
    conditioning.push_back(i);
    if (role == VideoRole::memory) ++n_memory;
  }
  if (per_video_scores.size() != conditioning.size()) {
    invalid("got " + std::to_string(per_video_scores.size()) + " score vectors for " +
            std::to_string(conditioning.size()) + " conditioning videos");
  }
  const CostModel& cost = allocation.cost_model;
  for (std::size_t i = 0; i < block_points.size(); ++i) {
    if (block_points[i] < 1 || block_points[i] > cost.blocks || (i > 0 && block_points[i] <= block_points[i - 1])) {
      invalid("block points must be increasing and within 1.." + std::to_string(cost.blocks));
    }
  }

  MergePlan out;
  out.block_points = block_points;
  out.discard = policy.discard;
  out.cost_model = cost;
  out.reduction = policy.reduction_factor(n_memory);
  out.pre_tokens = allocation.total_tokens;

  // Tokens removed from the sequence after each block point.
  std::vector<std::uint64_t> removed(block_points.size(), 0);
  std::uint64_t removed_once = 0;
  for (std::size_t c = 0; c < conditioning.size(); ++c) {
    const auto& video = allocation.per_video[conditioning[c]];
    const auto& scores = per_video_scores[c];
    if (scores.frame_count() != video.token_frames()) {
      invalid(video.label() + ": " + std::to_string(scores.frame_count()) + " scores for " +
              std::to_string(video.token_frames()) + " token frames");
    }
    VideoMergePlan v;
    v.video = conditioning[c];
    v.label = video.label();
    v.tokens_per_frame = video.tokens_per_frame();
    v.frames = select_frames(scores, policy);
    v.merged_tokens_per_frame = policy.discard ? 0 : merged_token_count(v.tokens_per_frame, out.reduction);
    v.pre_tokens = video.token_count;
    v.post_tokens = v.pre_tokens - v.frames.size() * (v.tokens_per_frame - v.merged_tokens_per_frame);
    removed_once += v.pre_tokens - v.post_tokens;

    std::uint64_t per_frame = v.tokens_per_frame;
    for (std::size_t s = 0; s < block_points.size(); ++s) {
      per_frame = policy.discard ? 0 : merged_token_count(per_frame, out.reduction);
      removed[s] += v.frames.size() * (v.tokens_per_frame - per_frame);
    }
    out.videos.push_back(std::move(v));
  }
  out.post_tokens = out.pre_tokens - removed_once;

  out.stage_tokens.push_back(out.pre_tokens);
  for (auto r : removed) out.stage_tokens.push_back(out.pre_tokens - r);

  if (out.pre_tokens > 0) {
    const double pre_cost = attention_cost(out.pre_tokens, cost.head_dim, 1);
    const auto block_cost = [&](std::uint64_t n) { return n == 0 ? 0.0 : attention_cost(n, cost.head_dim, 1); };
    out.merged_block_reduction = 1.0 - block_cost(out.post_tokens) / pre_cost;
    double total = 0.0;
    for (std::uint32_t b = 1; b <= cost.blocks; ++b) {
      const auto stage = static_cast<std::size_t>(
          std::upper_bound(block_points.begin(), block_points.end(), b) - block_points.begin());
      total += block_cost(out.stage_tokens[stage]);
    }
    out.model_reduction = 1.0 - total / (pre_cost * cost.blocks);
  }
  return out;
}

std::vector<double> apply_merge(std::span<const double> tokens, std::size_t n_tokens, std::size_t dim, double r) {
  if (n_tokens == 0 || dim == 0) invalid("apply_merge needs at least one token of positive width");
  if (tokens.size() != n_tokens * dim) invalid("token buffer does not hold n_tokens x dim values");
  const std::size_t groups = merged_token_count(n_tokens, r);
  const std::size_t base = n_tokens / groups;
  const std::size_t larger = n_tokens % groups;

  std::vector<double> out(groups * dim, 0.0);
  const auto& k = simd::kernels();
  std::size_t row = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t size = base + (g < larger ? 1 : 0);
    double* dst = out.data() + g * dim;
    for (std::size_t i = 0; i < size; ++i, ++row) k.accumulate(dst, tokens.data() + row * dim, dim);
    const double inv = 1.0 / static_cast<double>(size);
    for (std::size_t j = 0; j < dim; ++j) dst[j] *= inv;
  }
  return out;
}

}  // namespace memctx
