#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "scenemotion/core/random.hpp"
#include "scenemotion/core/vec3.hpp"
#include "scenemotion/scene/mesh.hpp"

namespace scenemotion::fixtures {

/// Closed box surface tessellated so no edge exceeds `spacing`. Vertices on
/// shared edges are welded, so the result is a closed manifold.
inline TriangleMesh make_box(const Vec3& lo, const Vec3& hi, double spacing = 0.25) {
  int n[3];
  for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::ceil((hi[a] - lo[a]) / spacing - 1e-9)));
  auto coord = [&](int axis, int step) {
    return step == n[axis] ? hi[axis] : lo[axis] + (hi[axis] - lo[axis]) * step / n[axis];
  };

  TriangleMesh mesh;
  std::map<std::tuple<double, double, double>, std::uint32_t> welded;
  auto vertex = [&](const Vec3& p) {
    auto key = std::make_tuple(p.x, p.y, p.z);
    auto it = welded.find(key);
    if (it != welded.end()) return it->second;
    auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    welded.emplace(key, idx);
    return idx;
  };

  // Each face: fixed axis `w` at side lo/hi, spanned by axes u, v.
  for (int w = 0; w < 3; ++w) {
    int u = (w + 1) % 3, v = (w + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      for (int a = 0; a < n[u]; ++a) {
        for (int b = 0; b < n[v]; ++b) {
          Vec3 q[4];
          int du[4] = {0, 1, 1, 0}, dv[4] = {0, 0, 1, 1};
          for (int c = 0; c < 4; ++c) {
            q[c][w] = side ? hi[w] : lo[w];
            q[c][u] = coord(u, a + du[c]);
            q[c][v] = coord(v, b + dv[c]);
          }
          std::uint32_t id[4];
          for (int c = 0; c < 4; ++c) id[c] = vertex(q[c]);
          // Outward winding: counter-clockwise seen from outside.
          if (side) {
            mesh.faces.push_back({id[0], id[1], id[2]});
            mesh.faces.push_back({id[0], id[2], id[3]});
          } else {
            mesh.faces.push_back({id[0], id[2], id[1]});
            mesh.faces.push_back({id[0], id[3], id[2]});
          }
        }
      }
    }
  }
  return mesh;
}

inline constexpr double kTestRoomSize = 6.15;
inline constexpr double kTestRoomHeight = 2.9;
inline constexpr double kFloorThickness = 0.05;
inline constexpr double kWallThickness = 0.1;

inline void add_floor_and_walls(TriangleMesh& mesh, double sx, double sy, double height, bool walls) {
  mesh.append(make_box({0, 0, -kFloorThickness}, {sx, sy, 0}));
  if (!walls) return;
  const double t = kWallThickness;
  mesh.append(make_box({0, 0, 0}, {t, sy, height}));
  mesh.append(make_box({sx - t, 0, 0}, {sx, sy, height}));
  mesh.append(make_box({t, 0, 0}, {sx - t, t, height}));
  mesh.append(make_box({t, sy - t, 0}, {sx - t, sy, height}));
}

/// The bundled test room: walled 6.15 m square floor, a table and two
/// chair-sized boxes. At cell_size 0.1 it voxelizes to 64x64x32.
inline TriangleMesh make_test_room() {
  TriangleMesh mesh;
  add_floor_and_walls(mesh, kTestRoomSize, kTestRoomSize, kTestRoomHeight, true);
  mesh.append(make_box({2.5, 2.7, 0}, {3.7, 3.5, 0.75}));     // table
  mesh.append(make_box({2.85, 1.9, 0}, {3.3, 2.35, 0.45}));   // chair
  mesh.append(make_box({2.85, 3.85, 0}, {3.3, 4.3, 0.45}));   // chair
  return mesh;
}

inline constexpr Vec3 kSeatA{1.5, 1.5, 0.45};
inline constexpr Vec3 kSeatB{4.5, 1.5, 0.45};

/// Open floor with two identical seats 3 m apart (a lattice translation at
/// cell sizes dividing 3 m). Seat-top centers are kSeatA / kSeatB.
inline TriangleMesh make_two_seat_room() {
  TriangleMesh mesh;
  add_floor_and_walls(mesh, 6.0, 3.0, 0.0, false);
  for (const Vec3& s : {kSeatA, kSeatB}) {
    mesh.append(make_box({s.x - 0.225, s.y - 0.225, 0}, {s.x + 0.225, s.y + 0.225, s.z}));
  }
  return mesh;
}

struct RandomRoomOptions {
  double min_size = 4.0;
  double max_size = 7.0;
  int min_boxes = 2;
  int max_boxes = 5;
};

/// Walled room with non-overlapping furniture boxes, for synthetic training data.
inline TriangleMesh make_random_room(Rng& rng, const RandomRoomOptions& opt = {}) {
  double sx = rng.uniform(opt.min_size, opt.max_size);
  double sy = rng.uniform(opt.min_size, opt.max_size);
  TriangleMesh mesh;
  add_floor_and_walls(mesh, sx, sy, 2.5, true);
  int want = opt.min_boxes + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_boxes - opt.min_boxes + 1)));
  std::vector<Aabb> placed;
  for (int attempt = 0; attempt < 50 && static_cast<int>(placed.size()) < want; ++attempt) {
    double w = rng.uniform(0.4, 1.5), d = rng.uniform(0.4, 1.5), h = rng.uniform(0.4, 1.0);
    double x = rng.uniform(0.6, sx - 0.6 - w), y = rng.uniform(0.6, sy - 0.6 - d);
    if (x < 0.6 || y < 0.6) continue;
    Aabb box{{x, y, 0}, {x + w, y + d, h}};
    bool clash = false;
    for (const Aabb& o : placed) {
      if (box.lo.x < o.hi.x + 0.6 && o.lo.x < box.hi.x + 0.6 && box.lo.y < o.hi.y + 0.6 && o.lo.y < box.hi.y + 0.6) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    placed.push_back(box);
    mesh.append(make_box(box.lo, box.hi));
  }
  return mesh;
}

}  // namespace scenemotion::fixtures
