#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "scenemotion/planner/astar.hpp"
#include "scenemotion/planner/walkable.hpp"
#include "scenemotion/scene/fixtures.hpp"
#include "scenemotion/scene/scene.hpp"
#include "scenemotion/trajectory/optimize.hpp"
#include "scenemotion/trajectory/trajectory.hpp"

using namespace scenemotion;

namespace {

struct Room {
  Scene scene;
  WalkableMap map;
};

const Room& test_room() {
  static const Room* room = [] {
    auto* r = new Room{build_scene(fixtures::make_test_room(), 0.1), {}};
    r->map = build_walkable(r->scene.grid);
    return r;
  }();
  return *room;
}

Anchor standing_at(const WalkableMap& map, Cell2 c, std::uint64_t seed) {
  Anchor a;
  a.action = ActionLabel::kStand;
  a.theta = PoseSampler{}.sample(a.action, seed);
  a.t = map.position(c);
  a.t.z += standing_pelvis_height(a.theta, a.action);
  return a;
}

// Random walkable start/goal pair joined by a standard A* path.
PathSegment random_segment(const Room& room, Rng& rng) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < room.map.walkable.size(); ++i)
    if (room.map.walkable[i]) free.push_back(i);
  for (;;) {
    Cell2 a = room.map.cell(free[rng.below(free.size())]), b = room.map.cell(free[rng.below(free.size())]);
    if (a == b) continue;
    GridPath p = astar(room.map, a, b, field_standard(room.map));
    return {p.cells, standing_at(room.map, a, rng.next_u64()), standing_at(room.map, b, rng.next_u64())};
  }
}

std::vector<Vec3> positions(const Trajectory& t) {
  std::vector<Vec3> out;
  for (const Frame& f : t.frames) out.push_back(f.t);
  return out;
}

Trajectory from_points(const std::vector<Vec3>& pts) {
  Trajectory t;
  for (const Vec3& p : pts) t.frames.push_back({p, rot6_from_yaw(0.0), ActionLabel::kWalk});
  return t;
}

}  // namespace

TEST(Split, ShortPathIsOneSegment) {
  VoxelGrid g = oracle::floor_grid(60, 10, 25, 0.1);
  WalkableMap m = build_walkable(g);
  GridPath p = astar(m, {5, 5}, {25, 5}, field_standard(m));
  auto segs = split_path(m, p, standing_at(m, {5, 5}, 1), standing_at(m, {25, 5}, 2), 3.0, PoseSampler{}, 0);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].cells.size(), p.cells.size());
}

TEST(Split, CeilingArithmeticAndEqualArcs) {
  VoxelGrid g = oracle::floor_grid(60, 10, 25, 0.1);
  WalkableMap m = build_walkable(g);
  GridPath p = astar(m, {2, 5}, {52, 5}, field_standard(m));
  const double L = polyline_length(path_points(m, p));
  ASSERT_NEAR(L, 5.0, 1e-9);
  Anchor s = standing_at(m, {2, 5}, 1), e = standing_at(m, {52, 5}, 2);
  auto segs = split_path(m, p, s, e, L / 2.5, PoseSampler{}, 3);
  ASSERT_EQ(segs.size(), 3u);
  std::vector<double> lens;
  for (const auto& seg : segs) {
    GridPath part{seg.cells, 0.0};
    lens.push_back(polyline_length(path_points(m, part)));
    EXPECT_LE(lens.back(), L / 2.5 + 1e-9);
  }
  const double diag = 0.1 * std::sqrt(2.0);
  for (double l : lens) EXPECT_NEAR(l, L / 3.0, diag);
  // Intermediate anchors chain the pieces and are locomotion actions.
  EXPECT_EQ(segs[0].end.t.x, segs[1].start.t.x);
  EXPECT_EQ(segs[1].end.t.y, segs[2].start.t.y);
  for (int k = 0; k < 2; ++k) {
    ActionLabel a = segs[static_cast<std::size_t>(k)].end.action;
    EXPECT_TRUE(a == ActionLabel::kWalk || a == ActionLabel::kStand || a == ActionLabel::kSquat);
  }
  EXPECT_EQ(segs.back().end.t.x, e.t.x);
}

TEST(Refine, StraightSegmentIsALine) {
  VoxelGrid g = oracle::floor_grid(40, 10, 25, 0.1);
  WalkableMap m = build_walkable(g);
  PathSegment seg{{{5, 5}, {30, 5}}, standing_at(m, {5, 5}, 1), standing_at(m, {30, 5}, 1)};
  RefineOptions opt;
  opt.jitter = 0.0;
  Trajectory t = refine_path(seg, m, g, 4, opt);
  ASSERT_EQ(t.frames.size(), 60u);
  Vec3 a = seg.start.t, d = seg.end.t - seg.start.t;
  const double step = norm(d) / 59.0;
  for (std::size_t k = 0; k < t.frames.size(); ++k) {
    Vec3 rel = t.frames[k].t - a;
    EXPECT_LT(norm(cross(rel, d)) / norm(d), 1e-9);
    if (k > 0) EXPECT_NEAR(distance(t.frames[k].t, t.frames[k - 1].t), step, 1e-6);
  }
}

TEST(Refine, EndpointsExactAndJitterSeeds) {
  const Room& room = test_room();
  Rng rng(3);
  PathSegment seg = random_segment(room, rng);
  while (seg.cells.size() < 15) seg = random_segment(room, rng);
  Trajectory a = refine_path(seg, room.map, room.scene.grid, 1), b = refine_path(seg, room.map, room.scene.grid, 2);
  for (const Trajectory* t : {&a, &b}) {
    EXPECT_EQ(t->frames.front().t.x, seg.start.t.x);
    EXPECT_EQ(t->frames.front().t.z, seg.start.t.z);
    EXPECT_EQ(t->frames.back().t.y, seg.end.t.y);
    EXPECT_EQ(t->frames.back().t.z, seg.end.t.z);
    EXPECT_TRUE(all_frames_free(*t, room.scene.grid));
  }
  double maxd = 0.0;
  for (std::size_t k = 0; k < a.frames.size(); ++k) maxd = std::max(maxd, distance(a.frames[k].t, b.frames[k].t));
  EXPECT_GT(maxd, 0.0);
  Trajectory again = refine_path(seg, room.map, room.scene.grid, 1);
  for (std::size_t k = 0; k < a.frames.size(); ++k) EXPECT_EQ(distance(a.frames[k].t, again.frames[k].t), 0.0);
}

TEST(Refine, RejectsBadInput) {
  VoxelGrid g = oracle::floor_grid(10, 10, 25, 0.1, {{5, 5}});
  WalkableMap m = build_walkable(g);
  PathSegment seg{{{0, 0}, {5, 5}}, {}, {}};
  EXPECT_THROW(refine_path(seg, m, g, 0), Error);
  RefineOptions one;
  one.frames = 1;
  PathSegment ok{{{0, 0}, {1, 0}}, {}, {}};
  EXPECT_THROW(refine_path(ok, m, g, 0, one), Error);
}

TEST(PositionalEncoding, Properties) {
  auto zero = positional_encoding(1, 8);
  for (std::size_t i = 0; i < zero.size(); ++i) EXPECT_EQ(zero[i], i % 2 == 0 ? 0.0 : 1.0);
  const int M = 60;
  std::vector<std::vector<double>> all;
  for (int s = 1; s <= M; ++s) {
    auto pe = positional_encoding(s, 4);
    for (double v : pe) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    all.push_back(pe);
  }
  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      double d = 0.0;
      for (int k = 0; k < 4; ++k) d += (all[i][k] - all[j][k]) * (all[i][k] - all[j][k]);
      EXPECT_GT(d, 0.0);
    }
  }
  EXPECT_THROW(positional_encoding(0, 4), Error);
  EXPECT_THROW(positional_encoding(1, 3), Error);
}

TEST(Optimize, StraightLineInOpenSpaceUnchanged) {
  VoxelGrid far = VoxelGrid::filled({0, 0, 0}, 0.1, {40, 40, 40}, false, 5.0);
  std::vector<Vec3> pts;
  for (int k = 0; k < 30; ++k) pts.push_back({0.5 + 0.1 * k, 1.0 + 0.05 * k, 2.0});
  auto r = optimize_trajectory(from_points(pts), far);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_LT(distance(r.trajectory.frames[k].t, pts[k]), 1e-6);
}

TEST(Optimize, ZigzagGetsSmoother) {
  VoxelGrid far = VoxelGrid::filled({0, 0, 0}, 0.1, {40, 40, 40}, false, 5.0);
  std::vector<Vec3> pts;
  for (int k = 0; k < 30; ++k) pts.push_back({0.5 + 0.1 * k, 1.0 + (k % 2 ? 0.1 : -0.1), 2.0});
  TrajectoryEnergy before = trajectory_energy(pts, far);
  auto r = optimize_trajectory(from_points(pts), far);
  TrajectoryEnergy after = trajectory_energy(positions(r.trajectory), far);
  EXPECT_LT(after.smoothness, before.smoothness);
  EXPECT_EQ(distance(r.trajectory.frames.front().t, pts.front()), 0.0);
  EXPECT_EQ(distance(r.trajectory.frames.back().t, pts.back()), 0.0);
}

TEST(Optimize, GrazingObstacleClearanceImproves) {
  VoxelGrid g = oracle::plane_grid(40, 40, 40, 0.1);
  std::vector<Vec3> pts;
  for (int k = 0; k < 30; ++k) pts.push_back({0.5 + 0.1 * k, 2.0, k == 0 || k == 29 ? 0.6 : 0.25});
  TrajectoryEnergy before = trajectory_energy(pts, g);
  ASSERT_GT(before.clearance, 0.0);
  auto r = optimize_trajectory(from_points(pts), g);
  EXPECT_LE(trajectory_energy(positions(r.trajectory), g).clearance, before.clearance);
  for (std::size_t i = 1; i < r.energy.size(); ++i) EXPECT_LE(r.energy[i], r.energy[i - 1]);
}

TEST(Optimize, GradientMatchesFiniteDifferencesOffCellBoundaries) {
  const Room& room = test_room();
  const VoxelGrid& g = room.scene.grid;
  const double c = g.cell_size;
  Rng rng(17);
  // Each lattice coordinate (relative to cell centers) has fractional part in
  // [0.3, 0.7], so the +-c/4 stencil of the sdf gradient stays in one piece.
  auto off_boundary = [&](Vec3 p) {
    for (int a = 0; a < 3; ++a) {
      double u = (p[a] - g.origin[a]) / c - 0.5;
      p[a] = g.origin[a] + (std::floor(u) + 0.3 + 0.4 * rng.uniform() + 0.5) * c;
    }
    return p;
  };
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec3> t;
    Vec3 p{rng.uniform(0.5, 5.5), rng.uniform(0.5, 5.5), rng.uniform(0.1, 0.5)};
    for (int k = 0; k < 12; ++k) {
      t.push_back(off_boundary(p));
      p += Vec3{rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.05, 0.05)};
      p.z = std::clamp(p.z, 0.1, 0.5);
    }
    auto grad = trajectory_gradient(t, g);
    const double h = 1e-6;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        auto up = t, dn = t;
        up[i][a] += h;
        dn[i][a] -= h;
        double num = (trajectory_energy(up, g).total - trajectory_energy(dn, g).total) / (2 * h);
        double an = grad[i][a];
        EXPECT_LT(std::abs(num - an) / std::max({std::abs(num), std::abs(an), 1e-6}), 1e-3)
            << "trial " << trial << " frame " << i << " axis " << a;
      }
    }
  }
}

TEST(Optimize, RefinedSegmentsStayFreeAndMonotone) {
  const Room& room = test_room();
  Rng rng(9);
  for (int n = 0; n < 10; ++n) {
    PathSegment seg = random_segment(room, rng);
    Trajectory t = refine_path(seg, room.map, room.scene.grid, n);
    auto r = optimize_trajectory(t, room.scene.grid);
    for (std::size_t i = 1; i < r.energy.size(); ++i) EXPECT_LE(r.energy[i], r.energy[i - 1]);
    EXPECT_TRUE(all_frames_free(r.trajectory, room.scene.grid));
    EXPECT_EQ(distance(r.trajectory.frames.front().t, seg.start.t), 0.0);
    EXPECT_EQ(distance(r.trajectory.frames.back().t, seg.end.t), 0.0);
  }
}

TEST(Stitch, FrameCountsAndJunctions) {
  auto line = [](Vec3 a, Vec3 b, int m) {
    std::vector<Vec3> pts;
    for (int k = 0; k < m; ++k) pts.push_back(a + (b - a) * (double(k) / (m - 1)));
    return from_points(pts);
  };
  const int M = 60;
  Trajectory a = line({0, 0, 1}, {1, 0, 1}, M), b = line({1, 0, 1}, {1, 2, 1}, M), c = line({1, 2, 1}, {0, 2, 1}, M);
  std::vector<Trajectory> two{a, b}, three{a, b, c};
  Trajectory s2 = stitch(two), s3 = stitch(three);
  EXPECT_EQ(s2.frames.size(), static_cast<std::size_t>(2 * M - 1));
  EXPECT_EQ(s3.frames.size(), static_cast<std::size_t>(3 * M - 2));
  EXPECT_EQ(distance(s3.frames[M - 1].t, b.frames.front().t), 0.0);
  EXPECT_EQ(distance(s3.frames[2 * M - 2].t, c.frames.front().t), 0.0);
  std::vector<Trajectory> broken{a, c};
  EXPECT_THROW(stitch(broken), Error);
}
