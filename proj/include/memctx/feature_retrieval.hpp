#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace memctx {

// Mean of the per-frame embeddings of one source segment.
struct SegmentDescriptor {
  std::vector<double> vector;
  std::uint32_t frame_count = 0;

  std::size_t dim() const noexcept { return vector.size(); }
  friend bool operator==(const SegmentDescriptor&, const SegmentDescriptor&) = default;
};

// Row-major frame_count x dim embeddings, as read from an embedding file.
struct EmbeddingFrames {
  std::uint32_t frame_count = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> frame(std::size_t t) const noexcept { return {values.data() + t * dim, dim}; }
};

// Arithmetic mean of the frames. Throws Error(invalid_argument) on an empty
// or ragged list, or non-finite input.
SegmentDescriptor descriptor(const std::vector<std::vector<double>>& frames);
SegmentDescriptor descriptor(const EmbeddingFrames& frames);

// Cosine similarity, clamped to [-1, 1]. Throws Error(degenerate_descriptor)
// for a zero-norm argument and Error(invalid_argument) on a dim mismatch.
double cosine_sim(const SegmentDescriptor& a, const SegmentDescriptor& b);

struct SegmentRanking {
  // 1-based history positions, best first, truncated to k.
  std::vector<std::size_t> order;
  // Similarity of every history entry to the target, in history order.
  std::vector<double> similarities;
};

// Sorts history by descending similarity to `target`; equal similarities put
// the more recent (larger) position first. With enforce_recent_first the last
// position N is moved to the front. Returns the first min(k, N) positions.
SegmentRanking rank_segments(const SegmentDescriptor& target, std::span<const SegmentDescriptor> history,
                             std::size_t k, bool enforce_recent_first);

// Embedding file: little-endian u32 magic 0x4D435458, u32 version = 1,
// u32 frame_count, u32 dim, then frame_count * dim float32 row-major.
inline constexpr std::uint32_t kEmbeddingMagic = 0x4D435458;
inline constexpr std::uint32_t kEmbeddingVersion = 1;

EmbeddingFrames read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingFrames& frames);

}  // namespace memctx
