#include "memctx/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "memctx/camera_geometry.hpp"
#include "memctx/config.hpp"
#include "memctx/error.hpp"
#include "memctx/feature_retrieval.hpp"
#include "memctx/fov_retrieval.hpp"
#include "memctx/memory_cache.hpp"
#include "memctx/merge_planner.hpp"
#include "memctx/responsiveness.hpp"
#include "memctx/rope_layout.hpp"
#include "memctx/serialize.hpp"
#include "memctx/token_budget.hpp"

#ifndef MEMCTX_VERSION
#define MEMCTX_VERSION "0.0.0"
#endif

namespace memctx {
namespace {

namespace fs = std::filesystem;
constexpr const char* kModule = "cli";

// Bad flag combinations found after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::optional<std::string> config;
  bool json = false;

  std::string cache_dir;
  std::string task;
  std::string key;
  std::string latent;
  std::optional<std::string> payload;

  std::string target;
  std::size_t k = 3;
  std::optional<double> lambda;
  std::optional<std::string> grid;
  std::optional<double> radius;
  bool recent_first = false;

  std::string user;
  std::optional<std::string> memory;
  std::optional<std::string> retrieved;
  std::string tiers = "default";

  std::string alloc;
  std::string slabs;
  std::optional<std::string> policy;
  std::optional<std::string> r_convention;
  std::optional<std::string> block_points;
  bool discard = false;

  std::string slab;
  std::vector<std::size_t> anchors;
  double k_fraction = 0.5;

  std::string rope_task;
  std::uint32_t frames = 0;
  bool reverse_memory = false;
  std::uint32_t memory_videos = 1;
  std::optional<std::string> mem_layout;
};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_json(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

std::uint32_t parse_count(std::string_view s, const std::string& what) {
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw UsageError(what + ": expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    parts.push_back(s.substr(start, at - start));
    if (at == std::string::npos) break;
    start = at + 1;
  }
  return parts;
}

GridId grid_of(const Options& o, const Config& cfg) {
  GridId g = cfg.grid;
  if (o.grid) {
    const auto parts = split(*o.grid, 'x');
    if (parts.size() != 2) throw UsageError("--grid: expected N_THETAxN_PHI, got '" + *o.grid + "'");
    g.n_theta = parse_count(parts[0], "--grid");
    g.n_phi = parse_count(parts[1], "--grid");
  }
  if (o.radius) g.radius = *o.radius;
  return g;
}

RConvention convention_of(const std::string& s) {
  if (s == "divisor") return RConvention::divisor;
  if (s == "kept-fraction") return RConvention::kept_fraction;
  throw UsageError("--r-convention must be divisor or kept-fraction, got '" + s + "'");
}

MemoryLayout layout_of(const std::string& s) {
  if (s == "shared") return MemoryLayout::shared;
  if (s == "stacked") return MemoryLayout::stacked;
  throw UsageError("--mem-layout must be shared or stacked, got '" + s + "'");
}

Task task_of(const std::string& s) {
  const auto t = parse_task(s);
  if (!t) throw UsageError("--task must be nvs or edit, got '" + s + "'");
  return *t;
}

std::vector<CacheEntry> entries_in_order(const CacheSnapshot& snap) {
  std::vector<CacheEntry> v(snap.begin(), snap.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.created_seq < b.created_seq; });
  return v;
}

// --- cache ---------------------------------------------------------------

int cache_add(const Options& o, const Config& cfg, std::ostream& out) {
  CacheEntry e;
  e.task = task_of(o.task);
  e.latent_shape = parse_latent_shape(o.latent);
  if (e.task == Task::novel_view) {
    e.key = read_trajectory(o.key, cfg.intrinsics);
  } else {
    e.key = descriptor(read_embeddings(o.key));
  }
  auto cache = Cache::open(o.cache_dir);
  std::optional<fs::path> payload;
  if (o.payload) payload = *o.payload;
  const auto added = cache.insert(std::move(e), payload);
  if (o.json) {
    print_json(out, to_json(added));
  } else {
    out << "entry " << added.entry_id << '\n';
  }
  return 0;
}

int cache_list(const Options& o, std::ostream& out) {
  const auto cache = Cache::load(o.cache_dir);
  const auto entries = entries_in_order(cache.snapshot());
  if (o.json) {
    Json list = Json::array();
    for (const auto& e : entries) list.push_back(to_json(e));
    print_json(out, Json{{"task", cache.task() ? Json(std::string(to_string(*cache.task()))) : Json(nullptr)},
                         {"entries", std::move(list)}});
    return 0;
  }
  for (const auto& e : entries) {
    out << e.entry_id << ' ' << e.created_seq << ' ' << to_string(e.task) << ' ' << format_latent_shape(e.latent_shape)
        << ' ';
    if (const auto* t = e.trajectory()) out << "trajectory:" << t->size();
    if (const auto* s = e.segment()) out << "descriptor:" << s->dim();
    out << ' ' << e.payload_ref.value_or("-") << '\n';
  }
  return 0;
}

int cache_gc(const Options& o, std::ostream& out) {
  auto cache = Cache::load(o.cache_dir);
  const auto removed = cache.gc();
  std::vector<std::string> names;
  for (const auto& p : removed) names.push_back(p.lexically_relative(cache.root()).generic_string());
  if (o.json) {
    print_json(out, Json{{"removed", names}});
  } else {
    for (const auto& n : names) out << n << '\n';
  }
  return 0;
}

// --- retrieval -----------------------------------------------------------

int retrieve_fov(const Options& o, const Config& cfg, std::ostream& out) {
  const double lambda = o.lambda.value_or(cfg.lambda);
  const GridId g = grid_of(o, cfg);
  const auto cache = Cache::load(o.cache_dir);
  const auto snap = cache.snapshot();
  const auto target = read_trajectory(o.target, cfg.intrinsics);
  const auto grid = sample_sphere(g.n_theta, g.n_phi, g.radius);
  FovRetrieval r;
  r.grid = g;
  r.lambda = lambda;
  r.matches = rank_by_fov(target, snap, o.k, lambda, grid);
  std::map<std::uint64_t, LatentShape> shapes;
  for (const auto& e : snap) shapes[e.entry_id] = e.latent_shape;
  for (const auto& m : r.matches) r.shapes.push_back(shapes.at(m.entry_id));

  if (o.json) {
    print_json(out, to_json(r));
    return 0;
  }
  for (std::size_t i = 0; i < r.matches.size(); ++i) {
    const auto& m = r.matches[i];
    out << i + 1 << ' ' << m.entry_id << ' ' << fixed(m.score.weighted) << ' ' << fixed(m.score.overlap) << ' '
        << fixed(m.score.contain) << '\n';
  }
  return 0;
}

int retrieve_feat(const Options& o, std::ostream& out) {
  const auto cache = Cache::load(o.cache_dir);
  const auto snap = cache.snapshot();
  if (snap.task() == Task::novel_view) {
    throw Error(ErrorKind::task_mismatch, kModule, o.cache_dir + " is a novel-view cache; retrieve-feat needs text-edit");
  }
  const auto entries = entries_in_order(snap);
  std::vector<SegmentDescriptor> history;
  for (const auto& e : entries) history.push_back(*e.segment());
  const auto target = descriptor(read_embeddings(o.target));
  const auto ranking = rank_segments(target, history, o.k, o.recent_first);

  FeatureRetrieval r;
  r.recent_first = o.recent_first;
  for (const auto pos : ranking.order) {
    r.entry_ids.push_back(entries[pos - 1].entry_id);
    r.similarities.push_back(ranking.similarities[pos - 1]);
    r.shapes.push_back(entries[pos - 1].latent_shape);
  }
  if (o.json) {
    print_json(out, to_json(r));
    return 0;
  }
  for (std::size_t i = 0; i < r.entry_ids.size(); ++i) {
    out << i + 1 << ' ' << r.entry_ids[i] << ' ' << fixed(r.similarities[i]) << '\n';
  }
  return 0;
}

// --- token planning ------------------------------------------------------

std::vector<LatentShape> memory_shapes(const Options& o) {
  if (o.memory && o.retrieved) throw UsageError("--memory and --retrieved are mutually exclusive");
  std::vector<LatentShape> shapes;
  if (o.memory) {
    if (o.memory->empty()) return shapes;
    for (const auto& s : split(*o.memory, ',')) shapes.push_back(parse_latent_shape(s));
  } else if (o.retrieved) {
    const Json j = read_json(*o.retrieved);
    shapes = j.contains("grid") ? fov_retrieval_from_json(j).shapes : feature_retrieval_from_json(j).shapes;
  }
  return shapes;
}

int plan_tokens(const Options& o, const Config& cfg, std::ostream& out) {
  TierConfig tiers = cfg.tiers;
  if (o.tiers == "uniform") {
    tiers = TierConfig::uniform();
  } else if (o.tiers != "default") {
    tiers = load_config(o.tiers, cfg).tiers;
  }
  const auto target = parse_latent_shape(o.target);
  const auto user = parse_latent_shape(o.user);
  const auto memory = memory_shapes(o);
  const auto a = allocate(target, user, memory, tiers, cfg.cost);
  const auto uniform = allocate(target, user, memory, TierConfig::uniform(), cfg.cost);
  const double reduction = reduction_report(uniform, a, cfg.cost.blocks, cfg.cost.head_dim);

  if (o.json) {
    Json j = to_json(a);
    j["baseline"] = Json{{"tiers", "uniform"}, {"total_tokens", uniform.total_tokens},
                         {"attention_cost", uniform.attention_cost}};
    j["reduction_vs_uniform"] = reduction;
    print_json(out, j);
    return 0;
  }
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-16s %-9s %8s %10s %12s\n", "video", "shape", "tokenizer", "frames",
                "per_frame", "tokens");
  out << line;
  for (const auto& v : a.per_video) {
    std::snprintf(line, sizeof line, "%-10s %-16s %-9s %8llu %10llu %12llu\n", v.label().c_str(),
                  format_latent_shape(v.shape).c_str(), v.tokenizer.to_string().c_str(),
                  static_cast<unsigned long long>(v.token_frames()), static_cast<unsigned long long>(v.tokens_per_frame()),
                  static_cast<unsigned long long>(v.token_count));
    out << line;
  }
  out << "total tokens " << a.total_tokens << '\n';
  out << "uniform 1x2x2 tokens " << uniform.total_tokens << '\n';
  out << "attention cost reduction vs uniform " << fixed(reduction) << '\n';
  return 0;
}

// --- merge planning ------------------------------------------------------

std::string slab_name(const VideoAllocation& v) {
  return v.role == VideoRole::memory ? "memory-" + std::to_string(v.memory_rank) + ".slab" : "user.slab";
}

// Scores for the conditioning videos of `a`: either one slab per video
// (user.slab, memory-1.slab, ...) or a single joint.slab whose frames run
// over the conditioning videos in allocation order.
std::vector<ResponsivenessVector> conditioning_scores(const fs::path& dir, const TokenAllocation& a) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, kModule, "slab directory not found: " + dir.string());
  std::vector<const VideoAllocation*> videos;
  for (const auto& v : a.per_video)
    if (v.role != VideoRole::target) videos.push_back(&v);

  std::vector<ResponsivenessVector> out;
  const fs::path joint = dir / "joint.slab";
  if (fs::exists(joint)) {
    const auto all = responsiveness(read_slab(joint));
    std::size_t at = 0;
    for (const auto* v : videos) {
      const auto n = static_cast<std::size_t>(v->token_frames());
      if (at + n > all.scores.size()) break;
      out.push_back({std::vector<double>(all.scores.begin() + at, all.scores.begin() + at + n)});
      at += n;
    }
    if (out.size() != videos.size() || at != all.scores.size()) {
      throw Error(ErrorKind::invalid_slab, kModule,
                  joint.string() + ": " + std::to_string(all.scores.size()) +
                      " frames do not match the conditioning token frames of the allocation");
    }
    return out;
  }
  for (const auto* v : videos) out.push_back(responsiveness(read_slab(dir / slab_name(*v))));
  return out;
}

int plan_merge(const Options& o, const Config& cfg, std::ostream& out) {
  const Config c = o.policy ? load_config(*o.policy, cfg) : cfg;
  MergePolicy policy = c.merge;
  if (o.discard) policy.discard = true;
  if (o.r_convention) policy.convention = convention_of(*o.r_convention);
  std::vector<std::uint32_t> points = c.block_points;
  if (o.block_points) {
    points.clear();
    if (!o.block_points->empty())
      for (const auto& s : split(*o.block_points, ',')) points.push_back(parse_count(s, "--block-points"));
  }
  const auto a = allocation_from_json(read_json(o.alloc));
  const auto scores = conditioning_scores(o.slabs, a);
  const auto p = plan(a, scores, policy, points);

  if (o.json) {
    print_json(out, to_json(p, policy));
    return 0;
  }
  out << "r " << fixed(p.reduction) << " (" << to_string(policy.convention) << "), "
      << (p.discard ? "discard" : "merge") << " at blocks";
  for (auto b : p.block_points) out << ' ' << b;
  out << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %7s %10s %10s %12s %12s\n", "video", "frames", "per_frame", "merged",
                "pre", "post");
  out << line;
  for (const auto& v : p.videos) {
    std::snprintf(line, sizeof line, "%-10s %7zu %10llu %10llu %12llu %12llu\n", v.label.c_str(), v.frames.size(),
                  static_cast<unsigned long long>(v.tokens_per_frame),
                  static_cast<unsigned long long>(v.merged_tokens_per_frame),
                  static_cast<unsigned long long>(v.pre_tokens), static_cast<unsigned long long>(v.post_tokens));
    out << line;
  }
  out << "sequence tokens " << p.pre_tokens << " -> " << p.post_tokens << '\n';
  out << "stage tokens";
  for (auto n : p.stage_tokens) out << ' ' << n;
  out << '\n';
  out << "attention cost reduction at a merged block " << fixed(p.merged_block_reduction) << '\n';
  out << "attention cost reduction over " << p.cost_model.blocks << " blocks " << fixed(p.model_reduction) << '\n';
  return 0;
}

// --- responsiveness ------------------------------------------------------

int score(const Options& o, std::ostream& out) {
  const auto r = responsiveness(read_slab(o.slab));
  if (o.json) {
    print_json(out, to_json(r));
    return 0;
  }
  for (std::size_t t = 0; t < r.scores.size(); ++t) out << t << ' ' << fixed(r.scores[t], 9) << '\n';
  return 0;
}

// Orders block files by name with embedded numbers compared by value.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view x(a.data() + i, ie - i), y(b.data() + j, je - j);
      while (x.size() > 1 && x.front() == '0') x.remove_prefix(1);
      while (y.size() > 1 && y.front() == '0') y.remove_prefix(1);
      if (x.size() != y.size()) return x.size() < y.size();
      if (x != y) return x < y;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

int analyze_blocks(const Options& o, std::ostream& out) {
  const fs::path dir(o.slabs);
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, kModule, "slab directory not found: " + dir.string());
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".slab") files.push_back(e.path().filename().string());
  }
  std::sort(files.begin(), files.end(), natural_less);
  std::vector<ResponsivenessVector> blocks;
  for (const auto& f : files) blocks.push_back(responsiveness(read_slab(dir / f)));
  const std::size_t n = blocks.size();
  if (n < 2) throw Error(ErrorKind::invalid_argument, kModule, dir.string() + " holds fewer than two block slabs");

  std::vector<std::size_t> anchors = o.anchors;
  if (anchors.empty()) {
    for (std::size_t a : {1u, 11u, 21u})
      if (a < n) anchors.push_back(a);
  }
  std::vector<BlockStability> rows;
  for (auto a : anchors) {
    if (a < 1 || a > n) {
      throw Error(ErrorKind::invalid_argument, kModule,
                  "anchor " + std::to_string(a) + " outside blocks 1.." + std::to_string(n));
    }
    rows.push_back(block_stability(blocks, a - 1, o.k_fraction));
  }

  if (o.json) {
    Json list = Json::array();
    for (const auto& r : rows) list.push_back(to_json(r));
    print_json(out, Json{{"blocks", n}, {"k_fraction", o.k_fraction}, {"rows", std::move(list)}});
    return 0;
  }
  const auto cell = [](const MetricSummary& m) { return fixed(m.mean, 3) + " +/- " + fixed(m.sd, 3); };
  char line[200];
  std::snprintf(line, sizeof line, "%-20s %-16s %-16s %-16s\n", "anchor", "pearson", "spearman",
                ("bottom-k (k=" + fixed(o.k_fraction * 100, 0) + "%)").c_str());
  out << line;
  for (const auto& r : rows) {
    const std::string label = "Block " + std::to_string(r.anchor + 1) + " vs " + std::to_string(r.anchor + 2) +
                              (r.anchor + 2 < n ? "-" + std::to_string(n) : "");
    std::snprintf(line, sizeof line, "%-20s %-16s %-16s %-16s\n", label.c_str(), cell(r.pearson).c_str(),
                  cell(r.spearman).c_str(), cell(r.bottom_k_overlap).c_str());
    out << line;
    if (r.pearson.skipped || r.spearman.skipped) {
      out << "  skipped constant comparisons: pearson " << r.pearson.skipped << ", spearman " << r.spearman.skipped
          << '\n';
    }
  }
  return 0;
}

// --- rope ----------------------------------------------------------------

int rope(const Options& o, const Config& cfg, std::ostream& out) {
  const MemoryLayout layout = o.mem_layout ? layout_of(*o.mem_layout) : cfg.mem_layout;
  RopeRanges l;
  if (o.rope_task == "nvs") {
    if (o.reverse_memory) throw UsageError("--reverse-memory applies only to --task edit");
    l = layout_nvs(o.frames, layout, o.memory_videos);
  } else if (o.rope_task == "edit") {
    l = layout_edit(o.frames, o.reverse_memory, layout, o.memory_videos);
  } else {
    throw UsageError("--task must be nvs or edit, got '" + o.rope_task + "'");
  }
  if (o.json) {
    print_json(out, to_json(l));
    return 0;
  }
  const bool stacked = l.memory_layout == MemoryLayout::stacked;
  for (const auto& r : l.ranges) {
    std::string role(to_string(r.role));
    if (stacked && r.role == RopeRole::memory) role += "#" + std::to_string(r.memory_video + 1);
    for (std::uint32_t f = 0; f < l.segment_length; ++f) {
      out << role << ' ' << f << ' ' << index_of(l, r.role, f, r.memory_video) << '\n';
    }
  }
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Memory context planning for multi-turn video editing", "memctx"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "TOML config file (default: $MEMCTX_CONFIG, else built-in defaults)");
  app.add_flag("--json", o.json, "Print machine-readable JSON");

  auto* cache = app.add_subcommand("cache", "Manage the external memory cache");
  cache->require_subcommand(1);
  auto* add = cache->add_subcommand("add", "Insert an entry");
  add->add_option("--cache", o.cache_dir, "Cache directory")->required();
  add->add_option("--task", o.task, "nvs or edit")->required();
  add->add_option("--key", o.key, "Trajectory (nvs) or embedding file (edit)")->required();
  add->add_option("--latent", o.latent, "Latent shape FxHxWxC")->required();
  add->add_option("--payload", o.payload, "Latent payload file to copy in");
  auto* list = cache->add_subcommand("list", "List entries");
  list->add_option("--cache", o.cache_dir, "Cache directory")->required();
  auto* gc = cache->add_subcommand("gc", "Remove unreferenced files");
  gc->add_option("--cache", o.cache_dir, "Cache directory")->required();

  auto* fov = app.add_subcommand("retrieve-fov", "Rank a novel-view cache by field-of-view overlap");
  fov->add_option("--cache", o.cache_dir, "Cache directory")->required();
  fov->add_option("--target", o.target, "Target trajectory file")->required();
  fov->add_option("--k", o.k, "Number of results")->capture_default_str();
  fov->add_option("--lambda", o.lambda, "Overlap weight in [0, 1]");
  fov->add_option("--grid", o.grid, "Sphere grid N_THETAxN_PHI");
  fov->add_option("--radius", o.radius, "Sphere radius");

  auto* feat = app.add_subcommand("retrieve-feat", "Rank a text-edit cache by descriptor similarity");
  feat->add_option("--cache", o.cache_dir, "Cache directory")->required();
  feat->add_option("--target", o.target, "Target embedding file")->required();
  feat->add_option("--k", o.k, "Number of results")->capture_default_str();
  feat->add_flag("--recent-first", o.recent_first, "Always rank the most recent segment first");

  auto* tokens = app.add_subcommand("plan-tokens", "Assign tokenizer tiers and model attention cost");
  tokens->add_option("--target", o.target, "Target latent shape FxHxWxC")->required();
  tokens->add_option("--user", o.user, "User-input latent shape FxHxWxC")->required();
  tokens->add_option("--memory", o.memory, "Memory latent shapes in relevance order, comma separated");
  tokens->add_option("--retrieved", o.retrieved, "JSON output of retrieve-fov or retrieve-feat");
  tokens->add_option("--tiers", o.tiers, "default, uniform, or a config file with a [tokens] section")
      ->capture_default_str();

  auto* merge = app.add_subcommand("plan-merge", "Plan token merging of low-responsiveness frames");
  merge->add_option("--alloc", o.alloc, "JSON output of plan-tokens")->required();
  merge->add_option("--slabs", o.slabs, "Directory with user.slab, memory-N.slab or joint.slab")->required();
  merge->add_option("--policy", o.policy, "TOML file overriding the [merge] settings");
  merge->add_flag("--discard", o.discard, "Drop selected frames instead of merging (baseline)");
  merge->add_option("--r-convention", o.r_convention, "divisor or kept-fraction");
  merge->add_option("--block-points", o.block_points, "Comma separated 1-based block indices");

  auto* sc = app.add_subcommand("score", "Frame responsiveness of one slab");
  sc->add_option("--slab", o.slab, "Slab file")->required();

  auto* blocks = app.add_subcommand("analyze-blocks", "Cross-block stability of responsiveness");
  blocks->add_option("--slabs", o.slabs, "Directory of per-block .slab files")->required();
  blocks->add_option("--anchor", o.anchors, "1-based anchor block (repeatable; default 1 11 21)");
  blocks->add_option("--k", o.k_fraction, "Bottom-k fraction")->capture_default_str();

  auto* rp = app.add_subcommand("rope", "Temporal RoPE index table");
  rp->add_option("--task", o.rope_task, "nvs or edit")->required();
  rp->add_option("--frames", o.frames, "Frames per segment")->required();
  rp->add_flag("--reverse-memory", o.reverse_memory, "Reverse previous/memory order (edit inference)");
  rp->add_option("--memory-videos", o.memory_videos, "Number of memory videos")->capture_default_str();
  rp->add_option("--mem-layout", o.mem_layout, "shared or stacked");

  auto* version = app.add_subcommand("version", "Print the version");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (version->parsed()) {
      out << "memctx " << MEMCTX_VERSION << '\n';
      return 0;
    }
    const Config cfg = resolve_config(o.config);
    if (add->parsed()) return cache_add(o, cfg, out);
    if (list->parsed()) return cache_list(o, out);
    if (gc->parsed()) return cache_gc(o, out);
    if (fov->parsed()) return retrieve_fov(o, cfg, out);
    if (feat->parsed()) return retrieve_feat(o, out);
    if (tokens->parsed()) return plan_tokens(o, cfg, out);
    if (merge->parsed()) return plan_merge(o, cfg, out);
    if (sc->parsed()) return score(o, out);
    if (blocks->parsed()) return analyze_blocks(o, out);
    if (rp->parsed()) return rope(o, cfg, out);
  } catch (const UsageError& e) {
    err << "memctx: usage: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << "memctx: " << e.module() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "memctx: error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace memctx
