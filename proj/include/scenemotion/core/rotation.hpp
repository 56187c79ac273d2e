#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/vec3.hpp"

namespace scenemotion {

/// 6D continuous rotation: the first two columns of a rotation matrix,
/// stored column-major as (c0.x, c0.y, c0.z, c1.x, c1.y, c1.z). Need not
/// be orthonormal; Gram-Schmidt recovers the matrix.
using Rot6 = std::array<double, 6>;

/// Column-major 3x3 rotation: cols[0] is the body forward axis, cols[2] up.
struct Mat3 {
  std::array<Vec3, 3> cols{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

  Vec3 operator*(const Vec3& v) const { return cols[0] * v.x + cols[1] * v.y + cols[2] * v.z; }

  double determinant() const { return dot(cols[0], cross(cols[1], cols[2])); }
};

inline constexpr double kMinRot6CrossNorm = 1e-8;

inline bool orthonormalizable(const Rot6& phi) {
  Vec3 a{phi[0], phi[1], phi[2]};
  Vec3 b{phi[3], phi[4], phi[5]};
  if (!is_finite(a) || !is_finite(b)) return false;
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return false;
  return norm(cross(a / na, b / nb)) > kMinRot6CrossNorm;
}

/// Gram-Schmidt on the two stored columns; the third is their cross product,
/// so the result always has det = +1.
inline Mat3 rotation_from_6d(const Rot6& phi) {
  if (!orthonormalizable(phi)) {
    throw Error(ErrorKind::kInvalidArgument, "6D rotation columns are parallel or degenerate");
  }
  Vec3 a{phi[0], phi[1], phi[2]};
  Vec3 b{phi[3], phi[4], phi[5]};
  Vec3 c0 = a / norm(a);
  Vec3 c1 = b - c0 * dot(c0, b);
  c1 = c1 / norm(c1);
  Mat3 m;
  m.cols = {c0, c1, cross(c0, c1)};
  return m;
}

inline Rot6 rot6_from_matrix(const Mat3& m) {
  return {m.cols[0].x, m.cols[0].y, m.cols[0].z, m.cols[1].x, m.cols[1].y, m.cols[1].z};
}

/// Rotation about +z (gravity up) by `yaw` radians.
inline Rot6 rot6_from_yaw(double yaw) {
  double c = std::cos(yaw);
  double s = std::sin(yaw);
  return {c, s, 0.0, -s, c, 0.0};
}

/// Yaw of the forward axis projected onto the ground plane.
inline double yaw_of(const Rot6& phi) {
  Mat3 m = rotation_from_6d(phi);
  return std::atan2(m.cols[0].y, m.cols[0].x);
}

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

}  // namespace scenemotion
