#pragma once

#include "memctx/simd/kernel_table.hpp"

namespace memctx::simd::detail {

// Scalar visibility predicate. The AVX2 kernel performs the same operations
// in the same order, so results agree bit for bit (build uses
// -ffp-contract=off).
inline bool visible(double x, double y, double z, const VisibilityCamera& c) noexcept {
  const double dx = x - c.center[0];
  const double dy = y - c.center[1];
  const double dz = z - c.center[2];
  const double zc = c.rotation[6] * dx + c.rotation[7] * dy + c.rotation[8] * dz;
  if (!(zc > 0.0)) return false;
  const double xc = c.rotation[0] * dx + c.rotation[1] * dy + c.rotation[2] * dz;
  const double yc = c.rotation[3] * dx + c.rotation[4] * dy + c.rotation[5] * dz;
  const double u = c.fx * (xc / zc) + c.cx;
  const double v = c.fy * (yc / zc) + c.cy;
  return u >= 0.0 && u < c.width && v >= 0.0 && v < c.height;
}

}  // namespace memctx::simd::detail
