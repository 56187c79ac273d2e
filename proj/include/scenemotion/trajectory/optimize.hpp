#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "scenemotion/scene/voxel_grid.hpp"
#include "scenemotion/trajectory/trajectory.hpp"

namespace scenemotion {

struct TrajectoryObjective {
  double smoothness_weight = 1.0;  // w_s
  double clearance_weight = 10.0;  // w_c
  double clearance = 0.3;          // epsilon_c, meters
};

struct TrajectoryEnergy {
  double smoothness = 0.0;  // sum of squared second differences
  double clearance = 0.0;   // sum of max(0, eps - sdf)^2
  double total = 0.0;
};

inline TrajectoryEnergy trajectory_energy(const std::vector<Vec3>& t, const VoxelGrid& grid,
                                          const TrajectoryObjective& obj = {}) {
  TrajectoryEnergy e;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) e.smoothness += squared_norm(t[i - 1] - t[i] * 2.0 + t[i + 1]);
  for (const Vec3& p : t) {
    double v = std::max(0.0, obj.clearance - sdf_at(grid, p));
    e.clearance += v * v;
  }
  e.total = obj.smoothness_weight * e.smoothness + obj.clearance_weight * e.clearance;
  return e;
}

/// Gradient of `trajectory_energy` with respect to every frame position. The
/// smoothness part is exact; the clearance part uses the central-difference
/// sdf gradient with step h (default cell_size / 4).
inline std::vector<Vec3> trajectory_gradient(const std::vector<Vec3>& t, const VoxelGrid& grid,
                                             const TrajectoryObjective& obj = {}, double h = 0.0) {
  if (h <= 0.0) h = grid.cell_size / 4.0;
  std::vector<Vec3> g(t.size());
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    Vec3 s = (t[i - 1] - t[i] * 2.0 + t[i + 1]) * (2.0 * obj.smoothness_weight);
    g[i - 1] += s;
    g[i] -= s * 2.0;
    g[i + 1] += s;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = obj.clearance - sdf_at(grid, t[i]);
    if (v > 0.0) g[i] -= sdf_gradient(grid, t[i], h) * (2.0 * obj.clearance_weight * v);
  }
  return g;
}

struct TrajectoryOptimizeOptions {
  TrajectoryObjective objective;
  int iterations = 100;
  double step = 1e-2;
};

struct TrajectoryOptimizeResult {
  Trajectory trajectory;
  std::vector<double> energy;  // initial value, then after each accepted iteration
};

/// Gradient descent with backtracking on the interior frames; the first and
/// last frames stay fixed. A step is accepted only if it does not raise the
/// energy and keeps every frame that was in free space in free space.
inline TrajectoryOptimizeResult optimize_trajectory(const Trajectory& traj, const VoxelGrid& grid,
                                                    const TrajectoryOptimizeOptions& opt = {}) {
  TrajectoryOptimizeResult out{traj, {}};
  std::vector<Vec3> t;
  for (const Frame& f : traj.frames) t.push_back(f.t);
  if (t.size() < 3) {
    out.energy.push_back(trajectory_energy(t, grid, opt.objective).total);
    return out;
  }
  std::vector<char> was_free(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) was_free[i] = sdf_at(grid, t[i]) >= 0.0;

  double e = trajectory_energy(t, grid, opt.objective).total;
  out.energy.push_back(e);
  for (int it = 0; it < opt.iterations; ++it) {
    std::vector<Vec3> g = trajectory_gradient(t, grid, opt.objective);
    g.front() = Vec3{};
    g.back() = Vec3{};
    double g2 = 0.0;
    for (const Vec3& v : g) g2 += squared_norm(v);
    if (!(g2 > 1e-20)) break;
    double step = opt.step;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      std::vector<Vec3> cand = t;
      for (std::size_t i = 1; i + 1 < t.size(); ++i) cand[i] -= g[i] * step;
      bool feasible = true;
      for (std::size_t i = 1; i + 1 < t.size() && feasible; ++i) {
        if (was_free[i] && sdf_at(grid, cand[i]) < 0.0) feasible = false;
      }
      double ec = feasible ? trajectory_energy(cand, grid, opt.objective).total : e;
      if (feasible && ec <= e - 1e-4 * step * g2) {
        t = std::move(cand);
        e = ec;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    out.energy.push_back(e);
  }
  for (std::size_t i = 0; i < t.size(); ++i) out.trajectory.frames[i].t = t[i];
  assign_headings(out.trajectory);
  return out;
}

}  // namespace scenemotion
