#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/anchors/body.hpp"
#include "scenemotion/anchors/pose.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/core/rotation.hpp"
#include "scenemotion/planner/astar.hpp"
#include "scenemotion/planner/walkable.hpp"
#include "scenemotion/scene/voxel_grid.hpp"

namespace scenemotion {

inline constexpr int kDefaultFrameCount = 60;
inline constexpr double kDefaultFrameInterval = 1.0 / 30.0;
inline constexpr double kDefaultMaxSegmentLength = 3.0;
inline constexpr double kMaxFrameStep = 0.2;

struct Frame {
  Vec3 t;
  Rot6 phi;
  ActionLabel action = ActionLabel::kWalk;
};

struct Trajectory {
  std::vector<Frame> frames;
  double frame_interval = kDefaultFrameInterval;
};

struct PathSegment {
  std::vector<Cell2> cells;
  Anchor start;
  Anchor end;
};

/// Horizontal arc length of the cell-center polyline, meters.
inline double polyline_length(const std::vector<Vec3>& pts) {
  double L = 0.0;
  for (std::size_t s = 1; s < pts.size(); ++s) L += std::hypot(pts[s].x - pts[s - 1].x, pts[s].y - pts[s - 1].y);
  return L;
}

/// Pelvis height above the floor for a body standing in `action` (feet on the ground).
inline double standing_pelvis_height(const PoseVector& theta, ActionLabel action) {
  return -lowest_contact_offset(proxy_body(theta, action));
}

/// Splits a path into ceil(L / max_len) pieces of near-equal arc length,
/// cutting at the path vertex nearest each equal-length mark. Every cut
/// becomes an intermediate anchor with a seeded action from {walk, stand,
/// squat}, a pose from `poses`, feet on the floor, facing along the path.
inline std::vector<PathSegment> split_path(const WalkableMap& map, const GridPath& path, const Anchor& start,
                                           const Anchor& end, double max_len, const PoseSampler& poses,
                                           std::uint64_t seed) {
  if (path.cells.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot split an empty path");
  if (!(max_len > 0.0)) throw Error(ErrorKind::kConfig, "max segment length must be positive");
  std::vector<Vec3> pts = path_points(map, path);
  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t s = 1; s < pts.size(); ++s) {
    arc[s] = arc[s - 1] + std::hypot(pts[s].x - pts[s - 1].x, pts[s].y - pts[s - 1].y);
  }
  const double L = arc.back();
  const int max_pieces = static_cast<int>(pts.size()) - 1;

  std::vector<std::size_t> cuts;  // interior vertex indices
  int n = std::max(1, static_cast<int>(std::ceil(L / max_len - 1e-9)));
  for (; n <= std::max(1, max_pieces); ++n) {
    cuts.clear();
    std::size_t prev = 0;
    bool ok = true;
    for (int k = 1; k < n; ++k) {
      double mark = L * k / n;
      auto it = std::lower_bound(arc.begin(), arc.end(), mark);
      std::size_t hi = static_cast<std::size_t>(it - arc.begin());
      std::size_t best = hi;
      if (hi > 0 && (hi == arc.size() || mark - arc[hi - 1] <= arc[hi] - mark)) best = hi - 1;
      best = std::max(best, prev + 1);
      if (best >= pts.size() - 1) {
        ok = false;
        break;
      }
      cuts.push_back(best);
      prev = best;
    }
    if (!ok) continue;
    double longest = 0.0;
    std::size_t a = 0;
    for (std::size_t c : cuts) {
      longest = std::max(longest, arc[c] - arc[a]);
      a = c;
    }
    longest = std::max(longest, L - arc[a]);
    if (longest <= max_len + 1e-9) break;
  }

  constexpr std::array<ActionLabel, 3> kIntermediate{ActionLabel::kWalk, ActionLabel::kStand, ActionLabel::kSquat};
  Rng rng(seed);
  std::vector<PathSegment> out;
  Anchor from = start;
  std::size_t a = 0;
  for (std::size_t k = 0; k <= cuts.size(); ++k) {
    const std::size_t b = k < cuts.size() ? cuts[k] : pts.size() - 1;
    PathSegment seg;
    seg.cells.assign(path.cells.begin() + static_cast<std::ptrdiff_t>(a), path.cells.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    seg.start = from;
    if (k < cuts.size()) {
      Anchor mid;
      mid.action = kIntermediate[rng.below(kIntermediate.size())];
      mid.theta = poses.sample(mid.action, mix_seed(seed, 1, k));
      mid.t = pts[b];
      mid.t.z += standing_pelvis_height(mid.theta, mid.action);
      Vec3 dir = pts[std::min(b + 1, pts.size() - 1)] - pts[b - 1];
      mid.phi = rot6_from_yaw(std::atan2(dir.y, dir.x));
      seg.end = mid;
    } else {
      seg.end = end;
    }
    from = seg.end;
    out.push_back(std::move(seg));
    a = b;
  }
  return out;
}

namespace detail {

/// Centripetal Catmull-Rom point between p1 and p2 at u in [0, 1].
inline Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double u) {
  auto knot = [](const Vec3& a, const Vec3& b) { return std::max(std::sqrt(distance(a, b)), 1e-12); };
  const double t0 = 0.0, t1 = t0 + knot(p0, p1), t2 = t1 + knot(p1, p2), t3 = t2 + knot(p2, p3);
  const double t = t1 + u * (t2 - t1);
  Vec3 a1 = p0 * ((t1 - t) / (t1 - t0)) + p1 * ((t - t0) / (t1 - t0));
  Vec3 a2 = p1 * ((t2 - t) / (t2 - t1)) + p2 * ((t - t1) / (t2 - t1));
  Vec3 a3 = p2 * ((t3 - t) / (t3 - t2)) + p3 * ((t - t2) / (t3 - t2));
  Vec3 b1 = a1 * ((t2 - t) / (t2 - t0)) + a2 * ((t - t0) / (t2 - t0));
  Vec3 b2 = a2 * ((t3 - t) / (t3 - t1)) + a3 * ((t - t1) / (t3 - t1));
  return b1 * ((t2 - t) / (t2 - t1)) + b2 * ((t - t1) / (t2 - t1));
}

/// Spline through `w` resampled to `m` points equally spaced in arc length;
/// the first and last points are exactly w.front() and w.back().
inline std::vector<Vec3> spline_resample(const std::vector<Vec3>& w, int m) {
  std::vector<Vec3> dense;
  if (w.size() == 1) return std::vector<Vec3>(static_cast<std::size_t>(m), w[0]);
  constexpr int kPerSpan = 24;
  for (std::size_t s = 0; s + 1 < w.size(); ++s) {
    Vec3 p0 = s == 0 ? w[0] * 2.0 - w[1] : w[s - 1];
    Vec3 p3 = s + 2 < w.size() ? w[s + 2] : w[s + 1] * 2.0 - w[s];
    for (int q = 0; q < kPerSpan; ++q) dense.push_back(catmull_rom(p0, w[s], w[s + 1], p3, static_cast<double>(q) / kPerSpan));
  }
  dense.push_back(w.back());
  dense.front() = w.front();

  std::vector<double> arc(dense.size(), 0.0);
  for (std::size_t s = 1; s < dense.size(); ++s) arc[s] = arc[s - 1] + distance(dense[s], dense[s - 1]);
  const double L = arc.back();
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(m));
  std::size_t seg = 1;
  for (int k = 0; k < m; ++k) {
    if (k == 0) {
      out.push_back(w.front());
      continue;
    }
    if (k == m - 1) {
      out.push_back(w.back());
      continue;
    }
    double target = L * k / (m - 1);
    while (seg + 1 < arc.size() && arc[seg] < target) ++seg;
    double span = arc[seg] - arc[seg - 1];
    double f = span > 0.0 ? (target - arc[seg - 1]) / span : 0.0;
    out.push_back(dense[seg - 1] + (dense[seg] - dense[seg - 1]) * f);
  }
  return out;
}

}  // namespace detail

/// Interior headings from the horizontal tangent; a vanishing tangent keeps
/// the previous heading. Endpoint orientations stay as given.
inline void assign_headings(Trajectory& traj) {
  auto& f = traj.frames;
  for (std::size_t k = 1; k + 1 < f.size(); ++k) {
    Vec3 d = f[k + 1].t - f[k - 1].t;
    if (std::hypot(d.x, d.y) < 1e-9) {
      f[k].phi = f[k - 1].phi;
    } else {
      f[k].phi = rot6_from_yaw(std::atan2(d.y, d.x));
    }
  }
}

struct RefineOptions {
  int frames = kDefaultFrameCount;
  double jitter = 0.05;  // lateral waypoint noise, meters
  double frame_interval = kDefaultFrameInterval;
  int max_attempts = 8;
};

inline bool all_frames_free(const Trajectory& traj, const VoxelGrid& grid) {
  for (const Frame& f : traj.frames) {
    if (sdf_at(grid, f.t) < 0.0) return false;
  }
  return true;
}

/// Moves interior frames with sdf < 0 along the sdf gradient until they reach
/// free space (a few Newton steps on sdf = 0); endpoints are left alone.
inline void push_out_of_obstacles(Trajectory& traj, const VoxelGrid& grid) {
  const double h = grid.cell_size / 4.0;
  for (std::size_t k = 1; k + 1 < traj.frames.size(); ++k) {
    Vec3& p = traj.frames[k].t;
    for (int it = 0; it < 20; ++it) {
      double d = sdf_at(grid, p);
      if (d >= 0.0) break;
      Vec3 g = sdf_gradient(grid, p, h);
      double g2 = squared_norm(g);
      if (g2 < 1e-12) g = {0.0, 0.0, 1.0}, g2 = 1.0;
      p += g * ((-d + 1e-3) / g2);
    }
  }
  assign_headings(traj);
}

/// Smooth M-frame trajectory along a segment. Waypoints are the anchor
/// translations at the ends and the path cells in between (their height
/// interpolated linearly in arc length between the anchors). Interior
/// waypoints get seeded lateral jitter; if any frame lands at sdf < 0 the
/// jitter is halved and redrawn, and after `max_attempts` it is dropped
/// (any frame still inside an obstacle is then pushed out).
inline Trajectory refine_path(const PathSegment& seg, const WalkableMap& map, const VoxelGrid& grid,
                              std::uint64_t seed, const RefineOptions& opt = {}) {
  if (opt.frames < 2) throw Error(ErrorKind::kConfig, "a trajectory needs at least 2 frames");
  for (const Cell2& c : seg.cells) {
    if (!map.is_walkable(c)) throw Error(ErrorKind::kInvalidArgument, "segment contains a non-walkable cell");
  }
  std::vector<Vec3> base{seg.start.t};
  if (seg.cells.size() > 2) {
    std::vector<Vec3> pts;
    for (const Cell2& c : seg.cells) pts.push_back(map.position(c));
    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t s = 1; s < pts.size(); ++s) arc[s] = arc[s - 1] + std::hypot(pts[s].x - pts[s - 1].x, pts[s].y - pts[s - 1].y);
    for (std::size_t s = 1; s + 1 < pts.size(); ++s) {
      double f = arc.back() > 0.0 ? arc[s] / arc.back() : 0.0;
      pts[s].z = seg.start.t.z + f * (seg.end.t.z - seg.start.t.z);
      base.push_back(pts[s]);
    }
  }
  base.push_back(seg.end.t);
  std::vector<Vec3> waypoints;
  for (const Vec3& p : base) {
    if (waypoints.empty() || distance(waypoints.back(), p) > 1e-9) waypoints.push_back(p);
  }
  if (waypoints.size() == 1 && distance(seg.start.t, seg.end.t) > 0.0) waypoints.push_back(seg.end.t);
  waypoints.back() = seg.end.t;

  auto build = [&](double sigma, Rng& rng) {
    std::vector<Vec3> w = waypoints;
    if (sigma > 0.0) {
      for (std::size_t s = 1; s + 1 < w.size(); ++s) {
        Vec3 d = waypoints[s + 1] - waypoints[s - 1];
        double n = std::hypot(d.x, d.y);
        if (n < 1e-12) continue;
        Vec3 lateral{-d.y / n, d.x / n, 0.0};
        w[s] += lateral * rng.normal(0.0, sigma);
      }
    }
    Trajectory traj;
    traj.frame_interval = opt.frame_interval;
    for (const Vec3& p : detail::spline_resample(w, opt.frames)) traj.frames.push_back({p, seg.start.phi, ActionLabel::kWalk});
    traj.frames.front() = {seg.start.t, seg.start.phi, seg.start.action};
    traj.frames.back() = {seg.end.t, seg.end.phi, seg.end.action};
    assign_headings(traj);
    return traj;
  };

  double sigma = opt.jitter;
  for (int attempt = 0; attempt < opt.max_attempts && sigma > 0.0; ++attempt) {
    Rng rng(mix_seed(seed, 0, static_cast<std::uint64_t>(attempt)));
    Trajectory t = build(sigma, rng);
    if (all_frames_free(t, grid)) return t;
    sigma *= 0.5;
  }
  Rng unused(seed);
  Trajectory t = build(0.0, unused);
  push_out_of_obstacles(t, grid);
  return t;
}

/// Joins trajectories that share boundary frames, dropping each duplicate.
inline Trajectory stitch(std::span<const Trajectory> parts) {
  Trajectory out;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& fr = parts[p].frames;
    if (fr.empty()) continue;
    if (out.frames.empty()) {
      out.frame_interval = parts[p].frame_interval;
      out.frames = fr;
      continue;
    }
    double gap = distance(out.frames.back().t, fr.front().t);
    if (gap > 1e-6) {
      throw Error(ErrorKind::kInvalidArgument, "trajectory boundary mismatch of " + std::to_string(gap) + " m at part " +
                                                   std::to_string(p));
    }
    out.frames.insert(out.frames.end(), fr.begin() + 1, fr.end());
  }
  return out;
}

/// Interleaved sinusoidal encoding of step in [1, M]: position p = step - 1,
/// entry 2i = sin(p / 10000^(2i/width)), entry 2i+1 = cos of the same.
inline std::vector<double> positional_encoding(int step, int width) {
  if (width < 2 || width % 2 != 0) throw Error(ErrorKind::kInvalidArgument, "encoding width must be even and positive");
  if (step < 1) throw Error(ErrorKind::kInvalidArgument, "steps start at 1");
  std::vector<double> pe(static_cast<std::size_t>(width));
  const double pos = step - 1;
  for (int i = 0; i < width / 2; ++i) {
    double freq = std::pow(10000.0, 2.0 * i / width);
    pe[static_cast<std::size_t>(2 * i)] = std::sin(pos / freq);
    pe[static_cast<std::size_t>(2 * i + 1)] = std::cos(pos / freq);
  }
  return pe;
}

}  // namespace scenemotion
