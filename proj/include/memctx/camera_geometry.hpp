#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace memctx {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline constexpr Mat3 kIdentity3{1, 0, 0, 0, 1, 0, 0, 0, 1};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::int32_t width = 0;
  std::int32_t height = 0;

  // fx, fy > 0 and a non-empty raster. Plain construction is unchecked so that
  // degenerate cameras can still be fed to visibility tests (they see nothing).
  bool valid() const noexcept { return fx > 0 && fy > 0 && width > 0 && height > 0; }

  // fx = fy = min(width, height), principal point at the image centre.
  static Intrinsics centered(std::int32_t width, std::int32_t height);

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

// World->camera extrinsics. A world point p maps to camera space as
// x_c = rotation * (p - translation); translation is the camera centre.
struct Pose {
  Mat3 rotation = kIdentity3;
  Vec3 translation{0, 0, 0};

  friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr double kPoseTolerance = 1e-6;

bool is_rotation(const Mat3& r, double tol = kPoseTolerance) noexcept;

// Throws Error(invalid_pose) unless pose.rotation is orthonormal with det +1.
void validate_pose(const Pose& pose);

struct CameraFrame {
  Intrinsics intrinsics;
  Pose pose;

  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;
};

struct CameraTrajectory {
  std::vector<CameraFrame> frames;

  std::size_t size() const noexcept { return frames.size(); }
  bool empty() const noexcept { return frames.empty(); }
  friend bool operator==(const CameraTrajectory&, const CameraTrajectory&) = default;
};

// (R_ref^T R, R_ref^T (t - t_ref)). relative_pose(p, p) is the identity pose.
Pose relative_pose(const Pose& pose, const Pose& ref);

// Inverse of relative_pose: the pose whose relativization against `ref` is `rel`.
Pose compose_pose(const Pose& ref, const Pose& rel) noexcept;

struct Pixel {
  double u;
  double v;
};

// Pixel of a world point, or nullopt when the camera-frame depth is not positive.
std::optional<Pixel> project(const Vec3& point, const Intrinsics& intr, const Pose& pose) noexcept;

// Half-open bounds: 0 <= u < width, 0 <= v < height.
bool in_fov(const Vec3& point, const Intrinsics& intr, const Pose& pose) noexcept;

struct GridId {
  std::uint32_t n_theta = 0;
  std::uint32_t n_phi = 0;
  double radius = 0.0;

  std::string to_string() const;
  friend bool operator==(const GridId&, const GridId&) = default;
};

// Latitude-longitude sample grid. Point (u, v) has index u * n_phi + v with
// theta_u = pi (u + 0.5) / n_theta, phi_v = 2 pi v / n_phi and
// p = radius (sin theta cos phi, sin theta sin phi, cos theta).
// Coordinates are stored structure-of-arrays for the visibility kernel.
class SphereGrid {
 public:
  SphereGrid(std::uint32_t n_theta, std::uint32_t n_phi, double radius);

  const GridId& id() const noexcept { return id_; }
  std::uint32_t n_theta() const noexcept { return id_.n_theta; }
  std::uint32_t n_phi() const noexcept { return id_.n_phi; }
  double radius() const noexcept { return id_.radius; }
  std::size_t size() const noexcept { return xs_.size(); }
  static std::size_t index(std::uint32_t u, std::uint32_t v, std::uint32_t n_phi) noexcept {
    return static_cast<std::size_t>(u) * n_phi + v;
  }

  Vec3 point(std::size_t m) const noexcept { return {xs_[m], ys_[m], zs_[m]}; }
  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& ys() const noexcept { return ys_; }
  const std::vector<double>& zs() const noexcept { return zs_; }

 private:
  GridId id_;
  std::vector<double> xs_, ys_, zs_;
};

// Throws Error(invalid_argument) on zero counts or non-positive radius.
SphereGrid sample_sphere(std::uint32_t n_theta, std::uint32_t n_phi, double radius);

// F x 12 row-major matrix; row t is [R_t | t_t] flattened row by row.
struct ExtrinsicsMatrix {
  std::size_t rows = 0;
  std::vector<double> values;

  static constexpr std::size_t cols = 12;
  double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
};

ExtrinsicsMatrix flatten_extrinsics(const CameraTrajectory& traj);
CameraTrajectory unflatten_extrinsics(const ExtrinsicsMatrix& m, const std::vector<Intrinsics>& intrinsics);

// Trajectory text format: one frame per line,
//   fx fy cx cy width height r11 r12 r13 r21 r22 r23 r31 r32 r33 tx ty tz
// or only the 12 extrinsic values, in which case `default_intrinsics` applies.
// '#' starts a comment. Poses are validated.
CameraTrajectory parse_trajectory(std::istream& in, const std::string& source_name,
                                  const std::optional<Intrinsics>& default_intrinsics = std::nullopt);
CameraTrajectory read_trajectory(const std::filesystem::path& path,
                                 const std::optional<Intrinsics>& default_intrinsics = std::nullopt);
// Writes full 18-column lines with round-trip precision.
void write_trajectory(std::ostream& out, const CameraTrajectory& traj);
void write_trajectory(const std::filesystem::path& path, const CameraTrajectory& traj);

}  // namespace memctx
