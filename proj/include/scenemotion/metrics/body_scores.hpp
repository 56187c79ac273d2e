#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "scenemotion/anchors/body.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/scene/voxel_grid.hpp"
#include "scenemotion/trajectory/trajectory.hpp"

namespace scenemotion {

inline constexpr double kDefaultContactTolerance = 0.05;

namespace detail {

inline void check_bodies(const Trajectory& traj, std::span<const ProxyBody> bodies) {
  if (bodies.size() != traj.frames.size()) throw Error(ErrorKind::kDimension, "need one proxy body per frame");
}

}  // namespace detail

/// Fraction of frames whose capsule sample points all have sdf >= 0.
inline double non_collision(const Trajectory& traj, std::span<const ProxyBody> bodies, const VoxelGrid& grid,
                            double spacing = 0.1) {
  detail::check_bodies(traj, bodies);
  if (traj.frames.empty()) return 1.0;
  std::size_t ok = 0;
  for (std::size_t k = 0; k < traj.frames.size(); ++k) {
    const Mat3 r = rotation_from_6d(traj.frames[k].phi);
    bool free = true;
    for (const Vec3& p : bodies[k].sample_points(spacing)) {
      if (sdf_at(grid, to_world(r, traj.frames[k].t, p)) < 0.0) {
        free = false;
        break;
      }
    }
    ok += free;
  }
  return static_cast<double>(ok) / static_cast<double>(traj.frames.size());
}

/// Fraction of frames with at least one designated contact within |sdf| <= tau.
inline double contact(const Trajectory& traj, std::span<const ProxyBody> bodies, const VoxelGrid& grid,
                      double tau = kDefaultContactTolerance) {
  detail::check_bodies(traj, bodies);
  if (traj.frames.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t k = 0; k < traj.frames.size(); ++k) {
    const Mat3 r = rotation_from_6d(traj.frames[k].phi);
    for (const Vec3& p : bodies[k].designated_contacts()) {
      if (std::abs(sdf_at(grid, to_world(r, traj.frames[k].t, p))) <= tau) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(traj.frames.size());
}

}  // namespace scenemotion
