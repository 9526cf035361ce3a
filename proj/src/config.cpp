#include "memctx/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "memctx/error.hpp"
#include "toml.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "config";

std::string where(const std::string& source, const toml::source_region& region) {
  return source + ":" + std::to_string(region.begin.line) + ":" + std::to_string(region.begin.column);
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const toml::node& node, const std::string& why) const {
    throw Error(ErrorKind::config, kModule, where(source_, node.source()) + ": " + why);
  }

  double real(const toml::node& node, const std::string& key) const {
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_integer()) return static_cast<double>(v->get());
    fail(node, "'" + key + "' must be a number");
  }

  std::uint32_t count(const toml::node& node, const std::string& key, std::uint32_t min) const {
    const auto* v = node.as_integer();
    if (!v) fail(node, "'" + key + "' must be an integer");
    const std::int64_t x = v->get();
    if (x < min || x > std::numeric_limits<std::uint32_t>::max()) {
      fail(node, "'" + key + "' must be an integer >= " + std::to_string(min));
    }
    return static_cast<std::uint32_t>(x);
  }

  std::string text(const toml::node& node, const std::string& key) const {
    if (const auto* v = node.as_string()) return v->get();
    fail(node, "'" + key + "' must be a string");
  }

  bool flag(const toml::node& node, const std::string& key) const {
    if (const auto* v = node.as_boolean()) return v->get();
    fail(node, "'" + key + "' must be true or false");
  }

  TokenizerSpec tokenizer(const toml::node& node, const std::string& key) const {
    try {
      return parse_tokenizer(text(node, key));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      fail(node, "'" + key + "': " + e.what());
    }
  }

  [[noreturn]] void fail_key(const toml::key& key, const std::string& why) const {
    throw Error(ErrorKind::config, kModule, where(source_, key.source()) + ": " + why);
  }

  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
};

void apply_retrieval(const Reader& r, const toml::table& t, Config& c) {
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (key == "lambda") {
      c.lambda = r.real(v, key);
      if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) r.fail(v, "'lambda' must lie in [0, 1]");
    } else {
      r.fail_key(k, "unknown key 'retrieval." + key + "'");
    }
  }
}

void apply_grid(const Reader& r, const toml::table& t, Config& c) {
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (key == "n_theta") {
      c.grid.n_theta = r.count(v, key, 1);
    } else if (key == "n_phi") {
      c.grid.n_phi = r.count(v, key, 1);
    } else if (key == "radius") {
      c.grid.radius = r.real(v, key);
      if (!(c.grid.radius > 0.0) || !std::isfinite(c.grid.radius)) r.fail(v, "'radius' must be positive");
    } else {
      r.fail_key(k, "unknown key 'grid." + key + "'");
    }
  }
}

void apply_tokens(const Reader& r, const toml::table& t, Config& c) {
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (key == "target") {
      c.tiers.target = r.tokenizer(v, key);
    } else if (key == "user") {
      c.tiers.user = r.tokenizer(v, key);
    } else if (key == "near") {
      c.tiers.near = r.tokenizer(v, key);
    } else if (key == "far") {
      c.tiers.far = r.tokenizer(v, key);
    } else if (key == "near_count") {
      c.tiers.near_count = r.count(v, key, 0);
    } else if (key == "head_dim") {
      c.cost.head_dim = r.count(v, key, 1);
    } else if (key == "blocks") {
      c.cost.blocks = r.count(v, key, 1);
    } else {
      r.fail_key(k, "unknown key 'tokens." + key + "'");
    }
  }
}

void apply_merge(const Reader& r, const toml::table& t, Config& c) {
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (key == "fraction_low") {
      c.merge.fraction_low = r.real(v, key);
      if (!(c.merge.fraction_low >= 0.0 && c.merge.fraction_low <= 1.0)) {
        r.fail(v, "'fraction_low' must lie in [0, 1]");
      }
    } else if (key == "r_base") {
      c.merge.r_base = r.real(v, key);
    } else if (key == "r_slope") {
      c.merge.r_slope = r.real(v, key);
    } else if (key == "r_convention") {
      const auto s = r.text(v, key);
      if (s == "divisor") {
        c.merge.convention = RConvention::divisor;
      } else if (s == "kept-fraction") {
        c.merge.convention = RConvention::kept_fraction;
      } else {
        r.fail(v, "'r_convention' must be \"divisor\" or \"kept-fraction\"");
      }
    } else if (key == "discard") {
      c.merge.discard = r.flag(v, key);
    } else if (key == "block_points") {
      const auto* arr = v.as_array();
      if (!arr) r.fail(v, "'block_points' must be an array of integers");
      c.block_points.clear();
      for (const auto& p : *arr) c.block_points.push_back(r.count(p, key, 1));
    } else {
      r.fail_key(k, "unknown key 'merge." + key + "'");
    }
  }
}

void apply_rope(const Reader& r, const toml::table& t, Config& c) {
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (key == "mem_layout") {
      const auto s = r.text(v, key);
      if (s == "shared") {
        c.mem_layout = MemoryLayout::shared;
      } else if (s == "stacked") {
        c.mem_layout = MemoryLayout::stacked;
      } else {
        r.fail(v, "'mem_layout' must be \"shared\" or \"stacked\"");
      }
    } else {
      r.fail_key(k, "unknown key 'rope." + key + "'");
    }
  }
}

void apply_intrinsics(const Reader& r, const toml::table& t, Config& c) {
  std::int32_t width = c.intrinsics.width, height = c.intrinsics.height;
  std::optional<double> fx, fy, cx, cy;
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    auto positive = [&] {
      const double x = r.real(v, key);
      if (!(x > 0.0) || !std::isfinite(x)) r.fail(v, "'" + key + "' must be positive");
      return x;
    };
    if (key == "width") {
      width = static_cast<std::int32_t>(std::min<std::uint32_t>(r.count(v, key, 1), 2147483647u));
    } else if (key == "height") {
      height = static_cast<std::int32_t>(std::min<std::uint32_t>(r.count(v, key, 1), 2147483647u));
    } else if (key == "fx") {
      fx = positive();
    } else if (key == "fy") {
      fy = positive();
    } else if (key == "cx") {
      cx = r.real(v, key);
    } else if (key == "cy") {
      cy = r.real(v, key);
    } else {
      r.fail_key(k, "unknown key 'intrinsics." + key + "'");
    }
  }
  Intrinsics k = Intrinsics::centered(width, height);
  if (fx) k.fx = *fx;
  if (fy) k.fy = *fy;
  if (cx) k.cx = *cx;
  if (cy) k.cy = *cy;
  if (!std::isfinite(k.cx) || !std::isfinite(k.cy)) r.fail(t, "principal point must be finite");
  c.intrinsics = k;
}

}  // namespace

Config parse_config(const std::string& text, const std::string& source_name, const Config& base) {
  toml::table doc;
  try {
    doc = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::config, kModule, where(source_name, e.source()) + ": " + std::string(e.description()));
  }
  const Reader r(source_name);
  Config c = base;
  for (auto&& [k, v] : doc) {
    const std::string section(k.str());
    const auto* t = v.as_table();
    if (!t) r.fail_key(k, "unknown top-level key '" + section + "'");
    if (section == "retrieval") {
      apply_retrieval(r, *t, c);
    } else if (section == "grid") {
      apply_grid(r, *t, c);
    } else if (section == "tokens") {
      apply_tokens(r, *t, c);
    } else if (section == "merge") {
      apply_merge(r, *t, c);
    } else if (section == "rope") {
      apply_rope(r, *t, c);
    } else if (section == "intrinsics") {
      apply_intrinsics(r, *t, c);
    } else {
      r.fail_key(k, "unknown section [" + section + "]");
    }
  }
  for (std::size_t i = 0; i < c.block_points.size(); ++i) {
    const auto p = c.block_points[i];
    if ((i > 0 && p <= c.block_points[i - 1]) || p > c.cost.blocks) {
      throw Error(ErrorKind::config, kModule,
                  source_name + ": block_points must be strictly increasing and within 1.." +
                      std::to_string(c.cost.blocks));
    }
  }
  return c;
}

Config load_config(const std::filesystem::path& path, const Config& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, kModule, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), base);
}

Config resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load_config(*explicit_path);
  if (const char* env = std::getenv("MEMCTX_CONFIG"); env && *env) return load_config(env);
  return {};
}

}  // namespace memctx
