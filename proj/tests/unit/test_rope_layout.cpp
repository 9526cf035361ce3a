#include <gtest/gtest.h>

#include <set>

#include "memctx/error.hpp"
#include "memctx/rope_layout.hpp"

using namespace memctx;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected memctx::Error";
  return ErrorKind::io;
}

void expect_partition(const RopeRanges& l, std::uint64_t blocks) {
  const std::uint64_t t = l.segment_length;
  std::vector<int> hits(blocks * t, 0);
  for (const auto& r : l.ranges) {
    EXPECT_EQ(r.end - r.start, t);
    ASSERT_LE(r.end, blocks * t);
    for (auto i = r.start; i < r.end; ++i) ++hits[i];
  }
  for (std::uint64_t i = 0; i < hits.size(); ++i) ASSERT_EQ(hits[i], 1) << "index " << i;
}

}  // namespace

TEST(RopeLayout, NvsEightyOneFrames) {
  const auto l = layout_nvs(81);
  ASSERT_EQ(l.ranges.size(), 3u);
  EXPECT_EQ(l.ranges[0], (RopeRange{RopeRole::target, 0, 0, 81, false}));
  EXPECT_EQ(l.ranges[1], (RopeRange{RopeRole::user_input, 0, 81, 162, false}));
  EXPECT_EQ(l.ranges[2], (RopeRange{RopeRole::memory, 0, 162, 243, false}));
  EXPECT_FALSE(l.reversed_memory);
  EXPECT_EQ(index_of(l, RopeRole::target, 0), 0u);
  EXPECT_EQ(index_of(l, RopeRole::memory, 80), 242u);
}

TEST(RopeLayout, NvsSingleFrame) {
  const auto l = layout_nvs(1);
  EXPECT_EQ(index_of(l, RopeRole::target, 0), 0u);
  EXPECT_EQ(index_of(l, RopeRole::user_input, 0), 1u);
  EXPECT_EQ(index_of(l, RopeRole::memory, 0), 2u);
}

TEST(RopeLayout, CoverageForManyLengths) {
  for (std::uint32_t t = 1; t <= 1024; t += (t < 64 ? 1 : 37)) {
    expect_partition(layout_nvs(t), 3);
    expect_partition(layout_edit(t, false), 3);
    expect_partition(layout_edit(t, true), 3);
  }
}

TEST(RopeLayout, EditDirectAndReversed) {
  const auto off = layout_edit(3, false);
  EXPECT_EQ(off.ranges[1].role, RopeRole::previous);
  EXPECT_EQ(index_of(off, RopeRole::memory, 0), 6u);
  const auto on = layout_edit(3, true);
  EXPECT_TRUE(on.reversed_memory);
  EXPECT_EQ(index_of(on, RopeRole::memory, 0), 8u);
  EXPECT_EQ(index_of(on, RopeRole::memory, 2), 6u);
  EXPECT_EQ(index_of(on, RopeRole::previous, 0), 5u);
  EXPECT_EQ(index_of(on, RopeRole::target, 0), 0u);  // target order is never flipped
  EXPECT_EQ(on.ranges[2].start, 6u);
  EXPECT_EQ(on.ranges[2].end, 9u);
}

TEST(RopeLayout, ReversalIsAnInvolution) {
  for (std::uint32_t t = 1; t <= 128; ++t) {
    const auto on = layout_edit(t, true), off = layout_edit(t, false);
    for (auto role : {RopeRole::previous, RopeRole::memory}) {
      std::set<std::uint64_t> a, b;
      for (std::uint32_t f = 0; f < t; ++f) {
        const auto once = index_of(on, role, f);
        const auto slot = slot_of(on, once);
        ASSERT_TRUE(slot);
        // Reversing the reversed frame lands back on f.
        EXPECT_EQ(index_of(on, role, slot->frame), once);
        EXPECT_EQ(index_of(on, role, t - 1 - (t - 1 - f)), once);
        EXPECT_EQ(index_of(on, role, t - 1 - f), index_of(off, role, f));
        a.insert(once);
        b.insert(index_of(off, role, f));
      }
      EXPECT_EQ(a, b);
    }
  }
}

TEST(RopeLayout, HandEnumeratedTableForFour) {
  const auto l = layout_nvs(4);
  const std::uint64_t want[3][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}};
  const RopeRole roles[3] = {RopeRole::target, RopeRole::user_input, RopeRole::memory};
  for (int r = 0; r < 3; ++r)
    for (std::uint32_t f = 0; f < 4; ++f) EXPECT_EQ(index_of(l, roles[r], f), want[r][f]);
}

TEST(RopeLayout, IndexOfIsInjective) {
  for (std::uint32_t t : {1u, 2u, 7u, 81u}) {
    for (const auto& l : {layout_nvs(t), layout_edit(t, false), layout_edit(t, true), layout_nvs(t, MemoryLayout::stacked, 3)}) {
      std::set<std::uint64_t> seen;
      std::size_t n = 0;
      for (const auto& r : l.ranges) {
        for (std::uint32_t f = 0; f < t; ++f, ++n) {
          const auto i = index_of(l, r.role, f, r.memory_video);
          seen.insert(i);
          const auto s = slot_of(l, i);
          ASSERT_TRUE(s);
          EXPECT_EQ(s->role, r.role);
          EXPECT_EQ(s->memory_video, r.memory_video);
          EXPECT_EQ(s->frame, f);
        }
      }
      EXPECT_EQ(seen.size(), n);
    }
  }
}

TEST(RopeLayout, SharedMemoryLayout) {
  const auto l = layout_nvs(5, MemoryLayout::shared, 4);
  EXPECT_EQ(l.ranges.size(), 3u);
  for (std::uint32_t j = 0; j < 4; ++j) EXPECT_EQ(index_of(l, RopeRole::memory, 2, j), 12u);
}

TEST(RopeLayout, StackedMemoryLayout) {
  const auto l = layout_nvs(5, MemoryLayout::stacked, 3);
  ASSERT_EQ(l.ranges.size(), 5u);
  expect_partition(l, 5);
  EXPECT_EQ(index_of(l, RopeRole::memory, 0, 0), 10u);
  EXPECT_EQ(index_of(l, RopeRole::memory, 0, 2), 20u);
  EXPECT_EQ(kind_of([&] { index_of(l, RopeRole::memory, 0, 3); }), ErrorKind::invalid_argument);
  const auto e = layout_edit(5, true, MemoryLayout::stacked, 2);
  EXPECT_EQ(index_of(e, RopeRole::memory, 0, 1), 19u);
}

TEST(RopeLayout, Errors) {
  EXPECT_EQ(kind_of([] { layout_nvs(0); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { layout_edit(0, true); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { layout_nvs(3, MemoryLayout::stacked, 0); }), ErrorKind::invalid_argument);
  const auto l = layout_nvs(3);
  EXPECT_EQ(kind_of([&] { index_of(l, RopeRole::memory, 3); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { index_of(l, RopeRole::previous, 0); }), ErrorKind::invalid_argument);
  EXPECT_FALSE(slot_of(l, 9));
}

TEST(RopeLayout, Names) {
  EXPECT_EQ(to_string(RopeTask::novel_view), "nvs");
  EXPECT_EQ(to_string(RopeTask::text_edit), "edit");
  EXPECT_EQ(to_string(RopeRole::user_input), "user_input");
  EXPECT_EQ(to_string(MemoryLayout::stacked), "stacked");
}
