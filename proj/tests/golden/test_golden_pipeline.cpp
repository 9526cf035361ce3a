#include <gtest/gtest.h>

#include "golden/pipeline_runner.hpp"
#include "support/test_support.hpp"

TEST(GoldenPipeline, ReproducesExpectedOutputsByteForByte) {
  testsupport::TempDir work;
  const auto run = golden::run_pipeline(MEMCTX_GOLDEN_DIR, work.path());
  for (const auto& p : run.problems) ADD_FAILURE() << p;
  EXPECT_EQ(run.outputs.size(), 8u);
}

TEST(GoldenPipeline, IsRepeatable) {
  testsupport::TempDir a, b;
  const auto first = golden::run_pipeline(MEMCTX_GOLDEN_DIR, a.path());
  const auto second = golden::run_pipeline(MEMCTX_GOLDEN_DIR, b.path());
  EXPECT_EQ(first.outputs, second.outputs);
}
