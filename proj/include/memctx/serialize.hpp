#pragma once

// JSON forms of the planning results, as printed by the CLI with --json.
// Every *_from_json loader accepts what the matching *_to_json wrote and
// throws Error(load) on anything else.

#include <string>
#include <vector>

#include "json.hpp"
#include "memctx/feature_retrieval.hpp"
#include "memctx/fov_retrieval.hpp"
#include "memctx/memory_cache.hpp"
#include "memctx/merge_planner.hpp"
#include "memctx/responsiveness.hpp"
#include "memctx/rope_layout.hpp"
#include "memctx/token_budget.hpp"

namespace memctx {

using Json = nlohmann::ordered_json;

Json to_json(const TokenAllocation& allocation);
TokenAllocation allocation_from_json(const Json& j);

Json to_json(const MergePlan& plan, const MergePolicy& policy);
MergePlan merge_plan_from_json(const Json& j);
MergePolicy merge_policy_from_json(const Json& j);

Json to_json(const RopeRanges& layout);
RopeRanges rope_from_json(const Json& j);

// One object per match; latent shapes come from the snapshot the ranking used.
struct FovRetrieval {
  GridId grid;
  double lambda = 0.5;
  std::vector<FovMatch> matches;
  std::vector<LatentShape> shapes;  // aligned with matches
};
Json to_json(const FovRetrieval& retrieval);
FovRetrieval fov_retrieval_from_json(const Json& j);

struct FeatureRetrieval {
  std::vector<std::uint64_t> entry_ids;  // best first
  std::vector<double> similarities;      // aligned with entry_ids
  std::vector<LatentShape> shapes;       // aligned with entry_ids
  bool recent_first = false;
};
Json to_json(const FeatureRetrieval& retrieval);
FeatureRetrieval feature_retrieval_from_json(const Json& j);

Json to_json(const CacheEntry& entry);
Json to_json(const ResponsivenessVector& scores);
Json to_json(const BlockStability& stability);

// Parses text as JSON, reporting failures as Error(load) against `source`.
Json parse_json(const std::string& text, const std::string& source);
Json read_json(const std::string& path);

}  // namespace memctx
