#include "memctx/camera_geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "camera_internal.hpp"
#include "memctx/error.hpp"
#include "simd/visibility.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "camera_geometry";

Mat3 transpose(const Mat3& m) noexcept {
  return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
}

Mat3 multiply(const Mat3& a, const Mat3& b) noexcept {
  Mat3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      out[i * 3 + j] = a[i * 3 + 0] * b[0 * 3 + j] + a[i * 3 + 1] * b[1 * 3 + j] + a[i * 3 + 2] * b[2 * 3 + j];
    }
  }
  return out;
}

Vec3 multiply(const Mat3& a, const Vec3& v) noexcept {
  return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2], a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
          a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

double determinant(const Mat3& m) noexcept {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void append_number(std::string& out, double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace

Intrinsics Intrinsics::centered(std::int32_t width, std::int32_t height) {
  const double f = static_cast<double>(std::min(width, height));
  return {f, f, width / 2.0, height / 2.0, width, height};
}

bool is_rotation(const Mat3& r, double tol) noexcept {
  const Mat3 rtr = multiply(transpose(r), r);
  for (int i = 0; i < 9; ++i) {
    const double expected = (i % 4 == 0) ? 1.0 : 0.0;
    if (!(std::abs(rtr[i] - expected) <= tol)) return false;
  }
  return std::abs(determinant(r) - 1.0) <= tol;
}

void validate_pose(const Pose& pose) {
  if (!is_rotation(pose.rotation)) {
    throw Error(ErrorKind::invalid_pose, kModule, "rotation is not orthonormal with determinant +1");
  }
  for (double t : pose.translation) {
    if (!std::isfinite(t)) throw Error(ErrorKind::invalid_pose, kModule, "non-finite translation");
  }
}

Pose relative_pose(const Pose& pose, const Pose& ref) {
  validate_pose(pose);
  validate_pose(ref);
  const Mat3 ref_t = transpose(ref.rotation);
  const Vec3 delta{pose.translation[0] - ref.translation[0], pose.translation[1] - ref.translation[1],
                   pose.translation[2] - ref.translation[2]};
  return {multiply(ref_t, pose.rotation), multiply(ref_t, delta)};
}

Pose compose_pose(const Pose& ref, const Pose& rel) noexcept {
  const Vec3 offset = multiply(ref.rotation, rel.translation);
  return {multiply(ref.rotation, rel.rotation),
          {ref.translation[0] + offset[0], ref.translation[1] + offset[1], ref.translation[2] + offset[2]}};
}

std::optional<Pixel> project(const Vec3& p, const Intrinsics& intr, const Pose& pose) noexcept {
  const Vec3 d{p[0] - pose.translation[0], p[1] - pose.translation[1], p[2] - pose.translation[2]};
  const Vec3 xc = multiply(pose.rotation, d);
  if (!(xc[2] > 0.0)) return std::nullopt;
  return Pixel{intr.fx * (xc[0] / xc[2]) + intr.cx, intr.fy * (xc[1] / xc[2]) + intr.cy};
}

bool in_fov(const Vec3& p, const Intrinsics& intr, const Pose& pose) noexcept {
  return simd::detail::visible(p[0], p[1], p[2], detail::visibility_camera(intr, pose));
}

std::string GridId::to_string() const {
  std::string out = std::to_string(n_theta) + "x" + std::to_string(n_phi) + "@";
  append_number(out, radius);
  return out;
}

SphereGrid::SphereGrid(std::uint32_t n_theta, std::uint32_t n_phi, double radius)
    : id_{n_theta, n_phi, radius} {
  if (n_theta == 0 || n_phi == 0) {
    throw Error(ErrorKind::invalid_argument, kModule, "sphere grid needs n_theta >= 1 and n_phi >= 1");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::invalid_argument, kModule, "sphere radius must be positive and finite");
  }
  const std::size_t m = static_cast<std::size_t>(n_theta) * n_phi;
  xs_.resize(m);
  ys_.resize(m);
  zs_.resize(m);
  for (std::uint32_t u = 0; u < n_theta; ++u) {
    const double theta = std::numbers::pi * (u + 0.5) / n_theta;
    const double sin_t = std::sin(theta);
    const double cos_t = std::cos(theta);
    for (std::uint32_t v = 0; v < n_phi; ++v) {
      const double phi = 2.0 * std::numbers::pi * v / n_phi;
      const std::size_t i = index(u, v, n_phi);
      xs_[i] = radius * (sin_t * std::cos(phi));
      ys_[i] = radius * (sin_t * std::sin(phi));
      zs_[i] = radius * cos_t;
    }
  }
}

SphereGrid sample_sphere(std::uint32_t n_theta, std::uint32_t n_phi, double radius) {
  return SphereGrid(n_theta, n_phi, radius);
}

ExtrinsicsMatrix flatten_extrinsics(const CameraTrajectory& traj) {
  if (traj.empty()) throw Error(ErrorKind::invalid_argument, kModule, "empty trajectory");
  ExtrinsicsMatrix m;
  m.rows = traj.size();
  m.values.reserve(m.rows * ExtrinsicsMatrix::cols);
  for (const auto& frame : traj.frames) {
    const auto& r = frame.pose.rotation;
    const auto& t = frame.pose.translation;
    for (int row = 0; row < 3; ++row) {
      m.values.insert(m.values.end(), {r[row * 3], r[row * 3 + 1], r[row * 3 + 2], t[row]});
    }
  }
  return m;
}

CameraTrajectory unflatten_extrinsics(const ExtrinsicsMatrix& m, const std::vector<Intrinsics>& intrinsics) {
  if (m.values.size() != m.rows * ExtrinsicsMatrix::cols || intrinsics.size() != m.rows) {
    throw Error(ErrorKind::invalid_argument, kModule, "extrinsics matrix and intrinsics disagree on frame count");
  }
  CameraTrajectory traj;
  traj.frames.reserve(m.rows);
  for (std::size_t f = 0; f < m.rows; ++f) {
    CameraFrame frame{intrinsics[f], {}};
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) frame.pose.rotation[row * 3 + col] = m.at(f, row * 4 + col);
      frame.pose.translation[row] = m.at(f, row * 4 + 3);
    }
    traj.frames.push_back(frame);
  }
  return traj;
}

CameraTrajectory parse_trajectory(std::istream& in, const std::string& source_name,
                                  const std::optional<Intrinsics>& default_intrinsics) {
  CameraTrajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, value);
      if (ec != std::errc{} || ptr != line.data() + end) {
        throw Error(ErrorKind::invalid_argument, kModule,
                    source_name + ":" + std::to_string(line_no) + ": bad number '" + line.substr(pos, end - pos) + "'");
      }
      values.push_back(value);
      pos = end;
    }
    if (values.empty()) continue;

    CameraFrame frame;
    std::size_t offset = 0;
    if (values.size() == 18) {
      const auto raster = [](double v) { return v >= 0.0 && v <= 2147483647.0 && v == std::floor(v); };
      if (!raster(values[4]) || !raster(values[5])) {
        throw Error(ErrorKind::invalid_argument, kModule,
                    source_name + ":" + std::to_string(line_no) + ": width/height must be non-negative integers");
      }
      if (!std::all_of(values.begin(), values.begin() + 4, [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorKind::invalid_argument, kModule,
                    source_name + ":" + std::to_string(line_no) + ": non-finite intrinsics");
      }
      frame.intrinsics = {values[0], values[1], values[2], values[3], static_cast<std::int32_t>(values[4]),
                          static_cast<std::int32_t>(values[5])};
      offset = 6;
    } else if (values.size() == 12 && default_intrinsics) {
      frame.intrinsics = *default_intrinsics;
    } else {
      throw Error(ErrorKind::invalid_argument, kModule,
                  source_name + ":" + std::to_string(line_no) + ": expected 18 values per frame, got " +
                      std::to_string(values.size()));
    }
    for (int i = 0; i < 9; ++i) frame.pose.rotation[i] = values[offset + i];
    for (int i = 0; i < 3; ++i) frame.pose.translation[i] = values[offset + 9 + i];
    try {
      validate_pose(frame.pose);
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    traj.frames.push_back(frame);
  }
  if (traj.empty()) throw Error(ErrorKind::invalid_argument, kModule, source_name + ": no frames");
  return traj;
}

CameraTrajectory read_trajectory(const std::filesystem::path& path,
                                 const std::optional<Intrinsics>& default_intrinsics) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, kModule, "cannot open trajectory " + path.string());
  return parse_trajectory(in, path.string(), default_intrinsics);
}

void write_trajectory(std::ostream& out, const CameraTrajectory& traj) {
  std::string line;
  for (const auto& frame : traj.frames) {
    line.clear();
    const auto& k = frame.intrinsics;
    for (double v : {k.fx, k.fy, k.cx, k.cy}) {
      append_number(line, v);
      line += ' ';
    }
    line += std::to_string(k.width) + ' ' + std::to_string(k.height);
    for (double v : frame.pose.rotation) {
      line += ' ';
      append_number(line, v);
    }
    for (double v : frame.pose.translation) {
      line += ' ';
      append_number(line, v);
    }
    out << line << '\n';
  }
}

void write_trajectory(const std::filesystem::path& path, const CameraTrajectory& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, kModule, "cannot write trajectory " + path.string());
  write_trajectory(out, traj);
  out.flush();
  if (!out) throw Error(ErrorKind::io, kModule, "write failed for " + path.string());
}

}  // namespace memctx
