#include "memctx/serialize.hpp"

#include <fstream>
#include <sstream>

#include "memctx/error.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "serialize";

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorKind::load, kModule, why); }

// Runs a loader and turns JSON access errors into Error(load).
template <class F>
auto guarded(const char* what, F&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    bad(std::string(what) + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::load) throw;
    bad(std::string(what) + ": " + e.what());
  }
}

const Json& at(const Json& j, const char* key) {
  if (!j.is_object()) bad(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

VideoRole parse_role(const std::string& s) {
  if (s == "target") return VideoRole::target;
  if (s == "user_input") return VideoRole::user_input;
  if (s == "memory") return VideoRole::memory;
  bad("unknown video role '" + s + "'");
}

RopeRole parse_rope_role(const std::string& s) {
  for (auto r : {RopeRole::target, RopeRole::user_input, RopeRole::previous, RopeRole::memory}) {
    if (s == to_string(r)) return r;
  }
  bad("unknown rope role '" + s + "'");
}

Json cost_json(const CostModel& c) { return Json{{"head_dim", c.head_dim}, {"blocks", c.blocks}}; }

CostModel cost_from(const Json& j) {
  CostModel c{at(j, "head_dim").get<std::uint32_t>(), at(j, "blocks").get<std::uint32_t>()};
  if (c.head_dim == 0 || c.blocks == 0) bad("cost model needs positive head_dim and blocks");
  return c;
}

Json grid_json(const GridId& g) { return Json{{"n_theta", g.n_theta}, {"n_phi", g.n_phi}, {"radius", g.radius}}; }

}  // namespace

Json to_json(const TokenAllocation& a) {
  Json videos = Json::array();
  for (const auto& v : a.per_video) {
    videos.push_back({{"label", v.label()},
                      {"role", std::string(to_string(v.role))},
                      {"memory_rank", v.memory_rank},
                      {"shape", format_latent_shape(v.shape)},
                      {"tokenizer", v.tokenizer.to_string()},
                      {"token_frames", v.token_frames()},
                      {"tokens_per_frame", v.tokens_per_frame()},
                      {"token_count", v.token_count}});
  }
  return Json{{"per_video", std::move(videos)},
              {"total_tokens", a.total_tokens},
              {"attention_cost", a.attention_cost},
              {"cost_model", cost_json(a.cost_model)}};
}

TokenAllocation allocation_from_json(const Json& j) {
  return guarded("token allocation", [&] {
    TokenAllocation a;
    a.cost_model = cost_from(at(j, "cost_model"));
    std::uint64_t total = 0;
    for (const auto& v : at(j, "per_video")) {
      VideoAllocation x;
      x.role = parse_role(at(v, "role").get<std::string>());
      x.memory_rank = at(v, "memory_rank").get<std::uint32_t>();
      x.shape = parse_latent_shape(at(v, "shape").get<std::string>());
      x.tokenizer = parse_tokenizer(at(v, "tokenizer").get<std::string>());
      x.token_count = at(v, "token_count").get<std::uint64_t>();
      if (x.token_count != token_count(x.shape, x.tokenizer)) {
        bad(x.label() + ": token_count does not match shape and tokenizer");
      }
      if ((x.role == VideoRole::memory) != (x.memory_rank > 0)) bad(x.label() + ": inconsistent memory_rank");
      total += x.token_count;
      a.per_video.push_back(x);
    }
    a.total_tokens = at(j, "total_tokens").get<std::uint64_t>();
    if (a.total_tokens != total) bad("total_tokens does not equal the per-video sum");
    a.attention_cost = at(j, "attention_cost").get<double>();
    return a;
  });
}

Json to_json(const MergePlan& p, const MergePolicy& policy) {
  Json videos = Json::array();
  for (const auto& v : p.videos) {
    videos.push_back({{"video", v.video},
                      {"label", v.label},
                      {"tokens_per_frame", v.tokens_per_frame},
                      {"merged_tokens_per_frame", v.merged_tokens_per_frame},
                      {"frames", v.frames},
                      {"pre_tokens", v.pre_tokens},
                      {"post_tokens", v.post_tokens}});
  }
  return Json{{"policy",
               {{"fraction_low", policy.fraction_low},
                {"r_base", policy.r_base},
                {"r_slope", policy.r_slope},
                {"r_convention", std::string(to_string(policy.convention))},
                {"discard", policy.discard}}},
              {"block_points", p.block_points},
              {"reduction", p.reduction},
              {"discard", p.discard},
              {"videos", std::move(videos)},
              {"pre_tokens", p.pre_tokens},
              {"post_tokens", p.post_tokens},
              {"stage_tokens", p.stage_tokens},
              {"merged_block_reduction", p.merged_block_reduction},
              {"model_reduction", p.model_reduction},
              {"cost_model", cost_json(p.cost_model)}};
}

MergePlan merge_plan_from_json(const Json& j) {
  return guarded("merge plan", [&] {
    MergePlan p;
    p.block_points = at(j, "block_points").get<std::vector<std::uint32_t>>();
    p.reduction = at(j, "reduction").get<double>();
    p.discard = at(j, "discard").get<bool>();
    for (const auto& v : at(j, "videos")) {
      VideoMergePlan x;
      x.video = at(v, "video").get<std::size_t>();
      x.label = at(v, "label").get<std::string>();
      x.tokens_per_frame = at(v, "tokens_per_frame").get<std::uint64_t>();
      x.merged_tokens_per_frame = at(v, "merged_tokens_per_frame").get<std::uint64_t>();
      x.frames = at(v, "frames").get<std::vector<std::uint32_t>>();
      x.pre_tokens = at(v, "pre_tokens").get<std::uint64_t>();
      x.post_tokens = at(v, "post_tokens").get<std::uint64_t>();
      if (x.merged_tokens_per_frame > x.tokens_per_frame ||
          x.post_tokens != x.pre_tokens - x.frames.size() * (x.tokens_per_frame - x.merged_tokens_per_frame)) {
        bad(x.label + ": post_tokens inconsistent with the merged frames");
      }
      p.videos.push_back(std::move(x));
    }
    p.pre_tokens = at(j, "pre_tokens").get<std::uint64_t>();
    p.post_tokens = at(j, "post_tokens").get<std::uint64_t>();
    p.stage_tokens = at(j, "stage_tokens").get<std::vector<std::uint64_t>>();
    if (p.stage_tokens.size() != p.block_points.size() + 1) bad("stage_tokens must have one entry per stage");
    p.merged_block_reduction = at(j, "merged_block_reduction").get<double>();
    p.model_reduction = at(j, "model_reduction").get<double>();
    p.cost_model = cost_from(at(j, "cost_model"));
    return p;
  });
}

MergePolicy merge_policy_from_json(const Json& j) {
  return guarded("merge policy", [&] {
    const Json& p = at(j, "policy");
    MergePolicy m;
    m.fraction_low = at(p, "fraction_low").get<double>();
    m.r_base = at(p, "r_base").get<double>();
    m.r_slope = at(p, "r_slope").get<double>();
    const auto c = at(p, "r_convention").get<std::string>();
    if (c == "divisor") {
      m.convention = RConvention::divisor;
    } else if (c == "kept-fraction") {
      m.convention = RConvention::kept_fraction;
    } else {
      bad("unknown r_convention '" + c + "'");
    }
    m.discard = at(p, "discard").get<bool>();
    return m;
  });
}

Json to_json(const RopeRanges& l) {
  Json ranges = Json::array();
  for (const auto& r : l.ranges) {
    ranges.push_back({{"role", std::string(to_string(r.role))},
                      {"memory_video", r.memory_video},
                      {"start", r.start},
                      {"end", r.end},
                      {"reversed", r.reversed}});
  }
  return Json{{"task", std::string(to_string(l.task))},
              {"segment_length", l.segment_length},
              {"memory_layout", std::string(to_string(l.memory_layout))},
              {"reversed_memory", l.reversed_memory},
              {"ranges", std::move(ranges)}};
}

RopeRanges rope_from_json(const Json& j) {
  return guarded("rope layout", [&] {
    RopeRanges l;
    const auto task = at(j, "task").get<std::string>();
    if (task == "nvs") {
      l.task = RopeTask::novel_view;
    } else if (task == "edit") {
      l.task = RopeTask::text_edit;
    } else {
      bad("unknown task '" + task + "'");
    }
    l.segment_length = at(j, "segment_length").get<std::uint32_t>();
    const auto layout = at(j, "memory_layout").get<std::string>();
    if (layout == "shared") {
      l.memory_layout = MemoryLayout::shared;
    } else if (layout == "stacked") {
      l.memory_layout = MemoryLayout::stacked;
    } else {
      bad("unknown memory_layout '" + layout + "'");
    }
    l.reversed_memory = at(j, "reversed_memory").get<bool>();
    for (const auto& r : at(j, "ranges")) {
      RopeRange x;
      x.role = parse_rope_role(at(r, "role").get<std::string>());
      x.memory_video = at(r, "memory_video").get<std::uint32_t>();
      x.start = at(r, "start").get<std::uint64_t>();
      x.end = at(r, "end").get<std::uint64_t>();
      x.reversed = at(r, "reversed").get<bool>();
      if (x.end < x.start || x.end - x.start != l.segment_length) bad("range length differs from segment_length");
      l.ranges.push_back(x);
    }
    return l;
  });
}

Json to_json(const FovRetrieval& r) {
  Json matches = Json::array();
  for (std::size_t i = 0; i < r.matches.size(); ++i) {
    const auto& m = r.matches[i];
    matches.push_back({{"rank", i + 1},
                       {"entry_id", m.entry_id},
                       {"weighted", m.score.weighted},
                       {"overlap", m.score.overlap},
                       {"contain", m.score.contain},
                       {"latent_shape", format_latent_shape(r.shapes.at(i))}});
  }
  return Json{{"grid", grid_json(r.grid)}, {"lambda", r.lambda}, {"matches", std::move(matches)}};
}

FovRetrieval fov_retrieval_from_json(const Json& j) {
  return guarded("fov retrieval", [&] {
    FovRetrieval r;
    const Json& g = at(j, "grid");
    r.grid = {at(g, "n_theta").get<std::uint32_t>(), at(g, "n_phi").get<std::uint32_t>(),
              at(g, "radius").get<double>()};
    r.lambda = at(j, "lambda").get<double>();
    std::size_t rank = 0;
    for (const auto& m : at(j, "matches")) {
      if (at(m, "rank").get<std::size_t>() != ++rank) bad("matches must be listed in rank order");
      FovMatch x;
      x.entry_id = at(m, "entry_id").get<std::uint64_t>();
      x.score.weighted = at(m, "weighted").get<double>();
      x.score.overlap = at(m, "overlap").get<double>();
      x.score.contain = at(m, "contain").get<double>();
      x.score.lambda = r.lambda;
      r.matches.push_back(x);
      r.shapes.push_back(parse_latent_shape(at(m, "latent_shape").get<std::string>()));
    }
    return r;
  });
}

Json to_json(const FeatureRetrieval& r) {
  Json matches = Json::array();
  for (std::size_t i = 0; i < r.entry_ids.size(); ++i) {
    matches.push_back({{"rank", i + 1},
                       {"entry_id", r.entry_ids[i]},
                       {"similarity", r.similarities.at(i)},
                       {"latent_shape", format_latent_shape(r.shapes.at(i))}});
  }
  return Json{{"recent_first", r.recent_first}, {"matches", std::move(matches)}};
}

FeatureRetrieval feature_retrieval_from_json(const Json& j) {
  return guarded("feature retrieval", [&] {
    FeatureRetrieval r;
    r.recent_first = at(j, "recent_first").get<bool>();
    std::size_t rank = 0;
    for (const auto& m : at(j, "matches")) {
      if (at(m, "rank").get<std::size_t>() != ++rank) bad("matches must be listed in rank order");
      r.entry_ids.push_back(at(m, "entry_id").get<std::uint64_t>());
      r.similarities.push_back(at(m, "similarity").get<double>());
      r.shapes.push_back(parse_latent_shape(at(m, "latent_shape").get<std::string>()));
    }
    return r;
  });
}

Json to_json(const CacheEntry& e) {
  Json key;
  if (const auto* t = e.trajectory()) {
    key = {{"type", "trajectory"}, {"frames", t->size()}};
  } else if (const auto* s = e.segment()) {
    key = {{"type", "descriptor"}, {"dim", s->dim()}, {"frames", s->frame_count}};
  }
  return Json{{"entry_id", e.entry_id},
              {"created_seq", e.created_seq},
              {"task", std::string(to_string(e.task))},
              {"latent_shape", format_latent_shape(e.latent_shape)},
              {"key", std::move(key)},
              {"payload", e.payload_ref ? Json(*e.payload_ref) : Json(nullptr)}};
}

Json to_json(const ResponsivenessVector& scores) { return Json{{"scores", scores.scores}}; }

Json to_json(const BlockStability& s) {
  const auto metric = [](const MetricSummary& m) {
    return Json{{"mean", m.mean}, {"sd", m.sd}, {"count", m.count}, {"skipped", m.skipped}};
  };
  return Json{{"anchor", s.anchor + 1},
              {"pearson", metric(s.pearson)},
              {"spearman", metric(s.spearman)},
              {"bottom_k_overlap", metric(s.bottom_k_overlap)}};
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    bad(source + ": " + e.what());
  }
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, kModule, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

}  // namespace memctx
