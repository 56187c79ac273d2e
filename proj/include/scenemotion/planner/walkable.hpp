#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/vec3.hpp"
#include "scenemotion/scene/scene.hpp"
#include "scenemotion/scene/voxel_grid.hpp"

namespace scenemotion {

/// Planar cell on the floor layer.
struct Cell2 {
  int i = 0;
  int j = 0;
  friend constexpr bool operator==(const Cell2&, const Cell2&) = default;
};

inline constexpr int kDirectionCount = 8;

/// Direction d points at angle d * 45 degrees: E, NE, N, NW, W, SW, S, SE.
inline constexpr std::array<std::array<int, 2>, kDirectionCount> kDirections{
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

inline int direction_index(int di, int dj) {
  for (int d = 0; d < kDirectionCount; ++d) {
    if (kDirections[d][0] == di && kDirections[d][1] == dj) return d;
  }
  throw Error(ErrorKind::kInvalidArgument, "cells are not 8-neighbors");
}

inline constexpr double kDefaultCylinderRadius = 0.3;
inline constexpr double kDefaultCylinderHeight = 1.7;

/// Floor-level cells where an upright cylinder fits, with 8-connectivity.
struct WalkableMap {
  const VoxelGrid* grid = nullptr;
  int layer = 0;  // floor layer index k
  int nx = 0;
  int ny = 0;
  double radius = kDefaultCylinderRadius;
  double height = kDefaultCylinderHeight;
  std::vector<std::uint8_t> walkable;  // nx * ny, i fastest
  std::vector<double> ground_z;        // floor surface height per cell

  std::size_t index(const Cell2& c) const { return static_cast<std::size_t>(c.j) * nx + static_cast<std::size_t>(c.i); }
  Cell2 cell(std::size_t idx) const { return {static_cast<int>(idx % nx), static_cast<int>(idx / nx)}; }
  bool inside(const Cell2& c) const { return c.i >= 0 && c.j >= 0 && c.i < nx && c.j < ny; }
  bool is_walkable(const Cell2& c) const { return inside(c) && walkable[index(c)] != 0; }
  std::size_t walkable_count() const {
    std::size_t n = 0;
    for (auto w : walkable) n += w;
    return n;
  }

  /// Cell center at floor height.
  Vec3 position(const Cell2& c) const {
    Vec3 p = grid->center({c.i, c.j, layer});
    p.z = ground_z[index(c)];
    return p;
  }

  CellIndex grid_cell(const Cell2& c) const { return {c.i, c.j, layer}; }
};

/// Cells of the floor layer whose supporting cell below is occupied (or is
/// the grid boundary when the floor layer is the bottom one) and whose
/// cylinder of `radius` x `height`, standing on the layer bottom, meets no
/// occupied cell. A cell box touching the cylinder counts as meeting it.
/// Space outside the grid is free.
inline WalkableMap build_walkable(const VoxelGrid& grid, double radius = kDefaultCylinderRadius,
                                  double height = kDefaultCylinderHeight) {
  if (!(radius > 0.0) || !(height > 0.0)) throw Error(ErrorKind::kConfig, "cylinder radius and height must be positive");
  WalkableMap map;
  map.grid = &grid;
  map.layer = floor_layer(grid);
  map.nx = grid.dims[0];
  map.ny = grid.dims[1];
  map.radius = radius;
  map.height = height;
  map.walkable.assign(static_cast<std::size_t>(map.nx) * map.ny, 0);
  map.ground_z.assign(map.walkable.size(), 0.0);

  const double c = grid.cell_size;
  const double base = grid.origin.z + map.layer * c;
  const int k_top = std::min(grid.dims[2] - 1, static_cast<int>(std::ceil(map.layer + height / c - 1e-9)) - 1);
  const int reach = static_cast<int>(std::ceil(radius / c));

  // Per column: does any occupied cell lie within the cylinder's height span?
  std::vector<std::uint8_t> blocked(map.walkable.size(), 0);
  for (int j = 0; j < map.ny; ++j) {
    for (int i = 0; i < map.nx; ++i) {
      for (int k = map.layer; k <= k_top; ++k) {
        if (grid.is_occupied({i, j, k})) {
          blocked[static_cast<std::size_t>(j) * map.nx + i] = 1;
          break;
        }
      }
    }
  }

  for (int j = 0; j < map.ny; ++j) {
    for (int i = 0; i < map.nx; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * map.nx + i;
      if (grid.is_occupied({i, j, map.layer})) continue;
      if (map.layer > 0 && !grid.is_occupied({i, j, map.layer - 1})) continue;
      bool clear = true;
      for (int dj = -reach; dj <= reach && clear; ++dj) {
        for (int di = -reach; di <= reach && clear; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= map.nx || jj >= map.ny) continue;
          if (!blocked[static_cast<std::size_t>(jj) * map.nx + ii]) continue;
          double dx = std::max(0.0, std::abs(di) - 0.5) * c;
          double dy = std::max(0.0, std::abs(dj) - 0.5) * c;
          if (dx * dx + dy * dy <= radius * radius) clear = false;
        }
      }
      if (!clear) continue;
      map.walkable[idx] = 1;
      Vec3 p = grid.center({i, j, map.layer});
      auto z = surface_below(grid, p.x, p.y, p.z, p.z - 2.0 * c);
      map.ground_z[idx] = z ? *z : base;
    }
  }
  if (map.walkable_count() == 0) throw Error(ErrorKind::kScene, "scene has no free floor");
  return map;
}

/// Nearest walkable cell to the horizontal position of `p` (ties: lowest index).
inline Cell2 nearest_walkable(const WalkableMap& map, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  Cell2 out{};
  for (std::size_t idx = 0; idx < map.walkable.size(); ++idx) {
    if (!map.walkable[idx]) continue;
    Vec3 q = map.grid->center({map.cell(idx).i, map.cell(idx).j, map.layer});
    double d = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
    if (d < best) {
      best = d;
      out = map.cell(idx);
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorKind::kScene, "scene has no free floor");
  return out;
}

}  // namespace scenemotion
