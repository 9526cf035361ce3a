#pragma once

// Declarative run configuration. Every field starts at the documented default;
// a TOML file overrides any subset of them.
//
//   [retrieval]  lambda
//   [grid]       n_theta, n_phi, radius
//   [tokens]     target, user, near, far (e.g. "1x4x4"), near_count, head_dim, blocks
//   [merge]      fraction_low, r_base, r_slope, r_convention, block_points, discard
//   [rope]       mem_layout ("shared" | "stacked")
//   [intrinsics] width, height, and optionally fx, fy, cx, cy
//
// Unknown sections or keys are rejected with their line and column.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memctx/camera_geometry.hpp"
#include "memctx/merge_planner.hpp"
#include "memctx/rope_layout.hpp"
#include "memctx/token_budget.hpp"

namespace memctx {

struct Config {
  double lambda = 0.5;
  GridId grid{180, 360, 1.0};
  TierConfig tiers;
  CostModel cost;
  MergePolicy merge;
  std::vector<std::uint32_t> block_points = kDefaultBlockPoints;
  MemoryLayout mem_layout = MemoryLayout::shared;
  // Applied to 12-column trajectory lines. Defaults to a centred 832x480
  // camera (fx = fy = min(width, height)).
  Intrinsics intrinsics = Intrinsics::centered(832, 480);

  friend bool operator==(const Config&, const Config&) = default;
};

// Parses TOML text on top of `base`. Throws Error(config) naming the source
// and position of the offending entry.
Config parse_config(const std::string& text, const std::string& source_name, const Config& base = {});
Config load_config(const std::filesystem::path& path, const Config& base = {});

// Config selected by an explicit path, else $MEMCTX_CONFIG, else defaults.
Config resolve_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace memctx
