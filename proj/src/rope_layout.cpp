#include "memctx/rope_layout.hpp"

#include <string>

#include "memctx/error.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "rope_layout";

RopeRanges build(RopeTask task, RopeRole second, std::uint32_t t, bool reverse, MemoryLayout layout,
                 std::uint32_t n_memory) {
  if (t == 0) throw Error(ErrorKind::invalid_argument, kModule, "segment length T must be >= 1");
  if (n_memory == 0) throw Error(ErrorKind::invalid_argument, kModule, "memory video count must be >= 1");
  RopeRanges out;
  out.task = task;
  out.segment_length = t;
  out.memory_layout = layout;
  out.reversed_memory = reverse;
  const std::uint64_t len = t;
  out.ranges.push_back({RopeRole::target, 0, 0, len, false});
  out.ranges.push_back({second, 0, len, 2 * len, reverse});
  const std::uint32_t blocks = layout == MemoryLayout::stacked ? n_memory : 1;
  for (std::uint32_t j = 0; j < blocks; ++j) {
    out.ranges.push_back({RopeRole::memory, j, (2 + j) * len, (3 + j) * len, reverse});
  }
  return out;
}

}  // namespace

std::string_view to_string(RopeTask task) noexcept { return task == RopeTask::novel_view ? "nvs" : "edit"; }

std::string_view to_string(RopeRole role) noexcept {
  switch (role) {
    case RopeRole::target: return "target";
    case RopeRole::user_input: return "user_input";
    case RopeRole::previous: return "previous";
    case RopeRole::memory: return "memory";
  }
  return "unknown";
}

std::string_view to_string(MemoryLayout layout) noexcept {
  return layout == MemoryLayout::shared ? "shared" : "stacked";
}

RopeRanges layout_nvs(std::uint32_t frames, MemoryLayout layout, std::uint32_t n_memory) {
  return build(RopeTask::novel_view, RopeRole::user_input, frames, false, layout, n_memory);
}

RopeRanges layout_edit(std::uint32_t frames, bool reversed_for_inference, MemoryLayout layout, std::uint32_t n_memory) {
  return build(RopeTask::text_edit, RopeRole::previous, frames, reversed_for_inference, layout, n_memory);
}

std::uint64_t index_of(const RopeRanges& layout, RopeRole role, std::uint32_t frame, std::uint32_t memory_video) {
  if (frame >= layout.segment_length) {
    throw Error(ErrorKind::invalid_argument, kModule,
                "frame " + std::to_string(frame) + " outside segment of length " + std::to_string(layout.segment_length));
  }
  // Shared layout: every memory video reuses the single memory range.
  const std::uint32_t block = (role == RopeRole::memory && layout.memory_layout == MemoryLayout::stacked) ? memory_video : 0;
  for (const auto& r : layout.ranges) {
    if (r.role != role || r.memory_video != block) continue;
    return r.reversed ? r.end - 1 - frame : r.start + frame;
  }
  throw Error(ErrorKind::invalid_argument, kModule,
              std::string("role ") + std::string(to_string(role)) + " (memory video " + std::to_string(memory_video) +
                  ") is not part of this layout");
}

std::optional<RopeSlot> slot_of(const RopeRanges& layout, std::uint64_t index) noexcept {
  for (const auto& r : layout.ranges) {
    if (index < r.start || index >= r.end) continue;
    const auto frame = static_cast<std::uint32_t>(r.reversed ? r.end - 1 - index : index - r.start);
    return RopeSlot{r.role, r.memory_video, frame};
  }
  return std::nullopt;
}

}  // namespace memctx
