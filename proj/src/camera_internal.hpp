#pragma once

#include "memctx/camera_geometry.hpp"
#include "memctx/simd/kernel_table.hpp"

namespace memctx::detail {

inline simd::VisibilityCamera visibility_camera(const Intrinsics& intr, const Pose& pose) noexcept {
  simd::VisibilityCamera c{};
  for (int i = 0; i < 9; ++i) c.rotation[i] = pose.rotation[i];
  for (int i = 0; i < 3; ++i) c.center[i] = pose.translation[i];
  c.fx = intr.fx;
  c.fy = intr.fy;
  c.cx = intr.cx;
  c.cy = intr.cy;
  c.width = static_cast<double>(intr.width);
  c.height = static_cast<double>(intr.height);
  return c;
}

}  // namespace memctx::detail
