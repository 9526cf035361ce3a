#include "memctx/token_budget.hpp"

#include <charconv>

#include "memctx/error.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "token_budget";

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) noexcept { return (a + b - 1) / b; }

void check_tokenizer(const TokenizerSpec& t, const char* what) {
  if (t.f == 0 || t.h == 0 || t.w == 0) {
    throw Error(ErrorKind::invalid_argument, kModule, std::string(what) + " tokenizer factors must be >= 1");
  }
}

VideoAllocation make(VideoRole role, std::uint32_t rank, const LatentShape& shape, const TokenizerSpec& tok) {
  if (!shape.positive()) {
    throw Error(ErrorKind::invalid_argument, kModule, "latent shape " + format_latent_shape(shape) + " has a zero extent");
  }
  return {role, rank, shape, tok, token_count(shape, tok)};
}

}  // namespace

std::string TokenizerSpec::to_string() const {
  return std::to_string(f) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

TokenizerSpec parse_tokenizer(std::string_view text) {
  std::uint32_t v[3] = {};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find('x', pos) : text.size();
    if (end == std::string_view::npos) break;
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, v[i]);
    if (ec != std::errc{} || ptr != text.data() + end || v[i] == 0) break;
    if (i == 2) return {v[0], v[1], v[2]};
    pos = end + 1;
  }
  throw Error(ErrorKind::invalid_argument, kModule, "malformed tokenizer '" + std::string(text) + "', expected fxhxw");
}

TierConfig TierConfig::uniform(TokenizerSpec spec) { return {spec, spec, spec, spec, 0}; }

std::string_view to_string(VideoRole role) noexcept {
  switch (role) {
    case VideoRole::target: return "target";
    case VideoRole::user_input: return "user_input";
    case VideoRole::memory: return "memory";
  }
  return "unknown";
}

std::uint64_t VideoAllocation::token_frames() const noexcept { return ceil_div(shape.frames, tokenizer.f); }

std::uint64_t VideoAllocation::tokens_per_frame() const noexcept {
  return ceil_div(shape.height, tokenizer.h) * ceil_div(shape.width, tokenizer.w);
}

std::string VideoAllocation::label() const {
  switch (role) {
    case VideoRole::target: return "target";
    case VideoRole::user_input: return "user";
    case VideoRole::memory: return "memory#" + std::to_string(memory_rank);
  }
  return "unknown";
}

std::uint64_t token_count(const LatentShape& s, const TokenizerSpec& t) noexcept {
  return ceil_div(s.frames, t.f) * ceil_div(s.height, t.h) * ceil_div(s.width, t.w);
}

TokenAllocation allocate(const LatentShape& target, const LatentShape& user, const std::vector<LatentShape>& memory,
                         const TierConfig& tiers, const CostModel& cost) {
  check_tokenizer(tiers.target, "target");
  check_tokenizer(tiers.user, "user");
  check_tokenizer(tiers.near, "near");
  check_tokenizer(tiers.far, "far");

  TokenAllocation out;
  out.cost_model = cost;
  out.per_video.reserve(2 + memory.size());
  out.per_video.push_back(make(VideoRole::target, 0, target, tiers.target));
  out.per_video.push_back(make(VideoRole::user_input, 0, user, tiers.user));
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto rank = static_cast<std::uint32_t>(i + 1);
    out.per_video.push_back(make(VideoRole::memory, rank, memory[i], rank <= tiers.near_count ? tiers.near : tiers.far));
  }
  for (const auto& v : out.per_video) out.total_tokens += v.token_count;
  out.attention_cost = attention_cost(out.total_tokens, cost.head_dim, cost.blocks);
  return out;
}

double attention_cost(std::uint64_t total_tokens, std::uint32_t head_dim, std::uint32_t blocks) {
  if (total_tokens == 0 || head_dim == 0 || blocks == 0) {
    throw Error(ErrorKind::invalid_argument, kModule, "attention cost needs positive tokens, head_dim and blocks");
  }
  const double n = static_cast<double>(total_tokens);
  return static_cast<double>(blocks) * (2.0 * n * n * head_dim + 2.0 * n * n * head_dim);
}

double reduction_report(const TokenAllocation& baseline, const TokenAllocation& candidate, std::uint32_t blocks,
                        std::uint32_t head_dim) {
  if (baseline.total_tokens == 0) {
    throw Error(ErrorKind::invalid_argument, kModule, "baseline allocation has zero cost");
  }
  const double base = attention_cost(baseline.total_tokens, head_dim, blocks);
  const double cand = candidate.total_tokens == 0 ? 0.0 : attention_cost(candidate.total_tokens, head_dim, blocks);
  return 1.0 - cand / base;
}

}  // namespace memctx
