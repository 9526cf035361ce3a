#pragma once

// Frame-level responsiveness of conditioning tokens to the target queries,
// and its stability across transformer blocks.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace memctx {

// Single-head query/key activations of one block. Values are not needed.
struct AttentionSlab {
  std::uint32_t n_tokens = 0;
  std::uint32_t dim = 0;
  std::vector<double> queries;            // n_tokens x dim, row-major
  std::vector<double> keys;               // n_tokens x dim, row-major
  std::vector<std::uint32_t> frame_index;  // token -> frame, frames contiguous from 0
  std::vector<std::uint8_t> target_mask;   // 1 marks a target query token

  std::uint32_t n_frames() const noexcept;
};

// Throws Error(invalid_slab) unless sizes agree, every frame 0..max has a
// token, at least one target token exists, and all values are finite.
void validate_slab(const AttentionSlab& slab);

struct ResponsivenessVector {
  std::vector<double> scores;  // R_t per frame, each in (0, 1]

  std::size_t frame_count() const noexcept { return scores.size(); }
};

// Spatial mean of the keys of each frame (n_frames x dim, row-major).
std::vector<double> aggregate_keys(const AttentionSlab& slab);

// R_t = max over target queries q of softmax_t(q . K_t / sqrt(D)), the
// softmax taken over frames.
ResponsivenessVector responsiveness(const AttentionSlab& slab);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1); 0 when n < 2
  std::size_t count = 0;
  std::size_t skipped = 0;  // comparisons where the metric is undefined
};

struct BlockStability {
  std::size_t anchor = 0;
  MetricSummary pearson;
  MetricSummary spearman;
  MetricSummary bottom_k_overlap;
};

// Compares block `anchor` (0-based) with every block in [first, last), which
// defaults to the blocks after the anchor. Pearson and Spearman are skipped
// when either vector is constant. Bottom-k keeps the ceil(k_fraction * T)
// lowest-scored frames, lower frame index first on ties.
BlockStability block_stability(const std::vector<ResponsivenessVector>& per_block, std::size_t anchor,
                               double k_fraction, std::optional<std::size_t> first = std::nullopt,
                               std::optional<std::size_t> last = std::nullopt);

// Statistics used by block_stability.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> average_ranks(const std::vector<double>& values);
std::vector<std::size_t> bottom_k(const std::vector<double>& scores, std::size_t k);
double bottom_k_overlap(const std::vector<double>& a, const std::vector<double>& b, double k_fraction);

// Slab file: little-endian u32 magic 0x534C4142, N, D, n_frames, n_target,
// then frame_index (N x u32), target token indices (n_target x u32),
// queries and keys (N x D float32 each).
inline constexpr std::uint32_t kSlabMagic = 0x534C4142;

AttentionSlab read_slab(const std::filesystem::path& path);
void write_slab(const std::filesystem::path& path, const AttentionSlab& slab);

}  // namespace memctx
