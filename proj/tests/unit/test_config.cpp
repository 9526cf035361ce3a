#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "memctx/config.hpp"
#include "memctx/error.hpp"
#include "support/test_support.hpp"

using namespace memctx;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "test.toml");
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error for:\n" << text;
  return {};
}

// Restores MEMCTX_CONFIG on scope exit.
class EnvGuard {
 public:
  EnvGuard() {
    if (const char* v = std::getenv("MEMCTX_CONFIG")) saved_ = v;
  }
  ~EnvGuard() {
    if (saved_) {
      ::setenv("MEMCTX_CONFIG", saved_->c_str(), 1);
    } else {
      ::unsetenv("MEMCTX_CONFIG");
    }
  }

 private:
  std::optional<std::string> saved_;
};

}  // namespace

TEST(Config, DefaultsMatchDocumentedValues) {
  const Config c;
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.grid, (GridId{180, 360, 1.0}));
  EXPECT_EQ(c.tiers, TierConfig{});
  EXPECT_EQ(c.tiers.near_count, 3u);
  EXPECT_EQ(c.cost, (CostModel{128, 30}));
  EXPECT_EQ(c.merge, MergePolicy{});
  EXPECT_EQ(c.block_points, (std::vector<std::uint32_t>{10, 20}));
  EXPECT_EQ(c.mem_layout, MemoryLayout::shared);
  EXPECT_EQ(c.intrinsics, (Intrinsics{480, 480, 416, 240, 832, 480}));
  EXPECT_EQ(parse_config("", "empty.toml"), c);
}

TEST(Config, EverySection) {
  const auto c = parse_config(R"(
[retrieval]
lambda = 0.25
[grid]
n_theta = 90
n_phi = 180
radius = 2
[tokens]
target = "1x1x1"
user = "1x2x2"
near = "2x4x4"
far = "2x8x8"
near_count = 2
head_dim = 64
blocks = 40
[merge]
fraction_low = 0.3
r_base = 0.7
r_slope = -0.05
r_convention = "kept-fraction"
block_points = [11, 21, 31]
discard = true
[rope]
mem_layout = "stacked"
[intrinsics]
width = 640
height = 360
fx = 500.5
)",
                              "full.toml");
  EXPECT_EQ(c.lambda, 0.25);
  EXPECT_EQ(c.grid, (GridId{90, 180, 2.0}));
  EXPECT_EQ(c.tiers, (TierConfig{{1, 1, 1}, {1, 2, 2}, {2, 4, 4}, {2, 8, 8}, 2}));
  EXPECT_EQ(c.cost, (CostModel{64, 40}));
  EXPECT_EQ(c.merge, (MergePolicy{0.3, 0.7, -0.05, RConvention::kept_fraction, true}));
  EXPECT_EQ(c.block_points, (std::vector<std::uint32_t>{11, 21, 31}));
  EXPECT_EQ(c.mem_layout, MemoryLayout::stacked);
  EXPECT_EQ(c.intrinsics, (Intrinsics{500.5, 360, 320, 180, 640, 360}));
}

TEST(Config, LayersOverBase) {
  Config base;
  base.lambda = 0.9;
  base.grid.n_theta = 36;
  const auto c = parse_config("[grid]\nn_phi = 72\n", "layer.toml", base);
  EXPECT_EQ(c.lambda, 0.9);
  EXPECT_EQ(c.grid, (GridId{36, 72, 1.0}));
}

TEST(Config, UnknownKeysNameTheirLocation) {
  EXPECT_NE(config_error("[grid]\nn_theta = 10\nn_phy = 20\n").find("test.toml:3:1"), std::string::npos);
  EXPECT_NE(config_error("[grid]\n  bogus = 1\n").find("grid.bogus"), std::string::npos);
  EXPECT_NE(config_error("[gird]\nn_theta = 1\n").find("unknown section [gird]"), std::string::npos);
  EXPECT_NE(config_error("lambda = 0.5\n").find("test.toml:1:1"), std::string::npos);
  EXPECT_NE(config_error("[merge]\nr_base = 1\nspeed = 2\n").find("merge.speed"), std::string::npos);
}

TEST(Config, RejectsBadValues) {
  for (const char* text : {
           "[retrieval]\nlambda = 1.5\n",
           "[retrieval]\nlambda = \"half\"\n",
           "[grid]\nn_theta = 0\n",
           "[grid]\nn_phi = 1.5\n",
           "[grid]\nradius = -1.0\n",
           "[tokens]\nnear = \"1x4\"\n",
           "[tokens]\nfar = 8\n",
           "[tokens]\nblocks = 0\n",
           "[merge]\nfraction_low = 2\n",
           "[merge]\nr_convention = \"inverse\"\n",
           "[merge]\nblock_points = [20, 10]\n",
           "[merge]\nblock_points = [10, 40]\n",
           "[merge]\nblock_points = 10\n",
           "[merge]\ndiscard = 1\n",
           "[rope]\nmem_layout = \"spread\"\n",
           "[intrinsics]\nwidth = 0\n",
           "[intrinsics]\nfx = -3.0\n",
           "[grid\n",
           "[grid]\nn_theta = \n",
       }) {
    config_error(text);
  }
}

TEST(Config, SyntaxErrorsCarryPosition) {
  EXPECT_NE(config_error("[grid]\nn_theta = = 3\n").find("test.toml:2:"), std::string::npos);
}

TEST(Config, LoadAndResolve) {
  EnvGuard guard;
  testsupport::TempDir dir;
  const auto a = dir / "a.toml";
  const auto b = dir / "b.toml";
  std::ofstream(a) << "[retrieval]\nlambda = 0.1\n";
  std::ofstream(b) << "[retrieval]\nlambda = 0.2\n";
  EXPECT_EQ(load_config(a).lambda, 0.1);

  ::unsetenv("MEMCTX_CONFIG");
  EXPECT_EQ(resolve_config(std::nullopt), Config{});
  ::setenv("MEMCTX_CONFIG", b.c_str(), 1);
  EXPECT_EQ(resolve_config(std::nullopt).lambda, 0.2);
  EXPECT_EQ(resolve_config(a).lambda, 0.1);  // explicit path wins

  ::setenv("MEMCTX_CONFIG", (dir / "missing.toml").c_str(), 1);
  try {
    resolve_config(std::nullopt);
    ADD_FAILURE() << "missing config accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}
