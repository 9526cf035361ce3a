#pragma once

// Temporal RoPE index ranges for target, user-input / previous-segment and
// memory videos. Spatial indices are untouched.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace memctx {

enum class RopeTask { novel_view, text_edit };
enum class RopeRole { target, user_input, previous, memory };
// shared: every memory video maps frame t to the same index.
// stacked: memory video j gets its own range after the previous one.
enum class MemoryLayout { shared, stacked };

std::string_view to_string(RopeTask task) noexcept;
std::string_view to_string(RopeRole role) noexcept;
std::string_view to_string(MemoryLayout layout) noexcept;

struct RopeRange {
  RopeRole role = RopeRole::target;
  std::uint32_t memory_video = 0;  // index among memory videos (stacked layout)
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive
  bool reversed = false;  // frame f -> end - 1 - f

  friend bool operator==(const RopeRange&, const RopeRange&) = default;
};

struct RopeRanges {
  RopeTask task = RopeTask::novel_view;
  std::uint32_t segment_length = 0;
  MemoryLayout memory_layout = MemoryLayout::shared;
  bool reversed_memory = false;
  std::vector<RopeRange> ranges;

  friend bool operator==(const RopeRanges&, const RopeRanges&) = default;
};

// target [0,T), user_input [T,2T), memory [2T,3T).
// With stacked layout and n_memory > 1, memory video j uses [(2+j)T, (3+j)T).
RopeRanges layout_nvs(std::uint32_t frames, MemoryLayout layout = MemoryLayout::shared, std::uint32_t n_memory = 1);

// target [0,T), previous [T,2T), memory [2T,3T). With reversed_for_inference
// the frame order inside the previous and memory ranges is flipped.
RopeRanges layout_edit(std::uint32_t frames, bool reversed_for_inference,
                       MemoryLayout layout = MemoryLayout::shared, std::uint32_t n_memory = 1);

// Temporal index of `frame` of the given role. Throws Error(invalid_argument)
// when the role is absent or frame/memory_video is out of range.
std::uint64_t index_of(const RopeRanges& layout, RopeRole role, std::uint32_t frame, std::uint32_t memory_video = 0);

// Inverse of index_of: the (role, memory_video, frame) owning `index`.
struct RopeSlot {
  RopeRole role;
  std::uint32_t memory_video;
  std::uint32_t frame;
};
std::optional<RopeSlot> slot_of(const RopeRanges& layout, std::uint64_t index) noexcept;

}  // namespace memctx
