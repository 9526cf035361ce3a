#pragma once

// Relevance-ranked tokenizer tiers and the attention cost model.
//
// Cost model: per transformer block, self-attention over N tokens with head
// dimension D costs 2 N^2 D (QK^T) + 2 N^2 D (attention x V) multiply-adds.
// MLP and modulation layers are excluded; they scale linearly in N. Costs are
// meant for relative comparisons only.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memctx/latent_shape.hpp"

namespace memctx {

struct TokenizerSpec {
  std::uint32_t f = 1;
  std::uint32_t h = 1;
  std::uint32_t w = 1;

  std::string to_string() const;
  friend bool operator==(const TokenizerSpec&, const TokenizerSpec&) = default;
};

// Parses "1x4x4". Throws Error(invalid_argument).
TokenizerSpec parse_tokenizer(std::string_view text);

struct TierConfig {
  TokenizerSpec target{1, 2, 2};  // mirrors the user tier
  TokenizerSpec user{1, 2, 2};
  TokenizerSpec near{1, 4, 4};    // memory ranks 1..near_count
  TokenizerSpec far{1, 8, 8};     // remaining memory ranks
  std::uint32_t near_count = 3;

  static TierConfig uniform(TokenizerSpec spec = {1, 2, 2});
  friend bool operator==(const TierConfig&, const TierConfig&) = default;
};

struct CostModel {
  std::uint32_t head_dim = 128;
  std::uint32_t blocks = 30;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

enum class VideoRole { target, user_input, memory };

std::string_view to_string(VideoRole role) noexcept;

struct VideoAllocation {
  VideoRole role = VideoRole::target;
  std::uint32_t memory_rank = 0;  // 1-based for memory videos, 0 otherwise
  LatentShape shape;
  TokenizerSpec tokenizer;
  std::uint64_t token_count = 0;

  std::uint64_t token_frames() const noexcept;
  std::uint64_t tokens_per_frame() const noexcept;
  std::string label() const;  // "target", "user", "memory#3"

  friend bool operator==(const VideoAllocation&, const VideoAllocation&) = default;
};

struct TokenAllocation {
  std::vector<VideoAllocation> per_video;
  std::uint64_t total_tokens = 0;
  double attention_cost = 0.0;
  CostModel cost_model;

  friend bool operator==(const TokenAllocation&, const TokenAllocation&) = default;
};

// ceil(F/f) * ceil(H/h) * ceil(W/w)
std::uint64_t token_count(const LatentShape& shape, const TokenizerSpec& tok) noexcept;

// Target and user get their tiers; memory ranks 1..near_count get `near`,
// later ranks get `far`. memory_shapes must already be in relevance order.
TokenAllocation allocate(const LatentShape& target, const LatentShape& user,
                         const std::vector<LatentShape>& memory_shapes, const TierConfig& tiers = {},
                         const CostModel& cost = {});

// blocks * 4 * N^2 * D. Throws Error(invalid_argument) on zero arguments.
double attention_cost(std::uint64_t total_tokens, std::uint32_t head_dim, std::uint32_t blocks);

// 1 - cost(candidate) / cost(baseline) under the same block/head configuration.
double reduction_report(const TokenAllocation& baseline, const TokenAllocation& candidate, std::uint32_t blocks,
                        std::uint32_t head_dim);

}  // namespace memctx
