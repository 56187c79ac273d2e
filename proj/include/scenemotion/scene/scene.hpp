#pragma once

#include <cmath>
#include <optional>

#include "scenemotion/scene/bps.hpp"
#include "scenemotion/scene/mesh.hpp"
#include "scenemotion/scene/voxel_grid.hpp"

namespace scenemotion {

/// A loaded scene: the source mesh (for BPS context) and its voxel grid.
struct Scene {
  TriangleMesh mesh;
  VoxelGrid grid;
};

inline Scene build_scene(TriangleMesh mesh, double cell_size) {
  mesh.validate();
  VoxelGrid grid = voxelize(mesh, cell_size);
  return {std::move(mesh), std::move(grid)};
}

/// Lowest layer holding an unoccupied cell directly above an occupied one.
/// When no cell has occupied support the bottom layer (resting on the grid
/// boundary) is used.
inline int floor_layer(const VoxelGrid& grid) {
  for (int k = 1; k < grid.dims[2]; ++k) {
    for (int j = 0; j < grid.dims[1]; ++j) {
      for (int i = 0; i < grid.dims[0]; ++i) {
        if (!grid.is_occupied({i, j, k}) && grid.is_occupied({i, j, k - 1})) return k;
      }
    }
  }
  return 0;
}

/// Height of the first surface met going down from `top` at (x, y), searched
/// no lower than `bottom`: the sdf zero crossing found by bisection. Returns
/// nullopt when the sdf does not change sign in that range.
inline std::optional<double> surface_below(const VoxelGrid& grid, double x, double y, double top, double bottom) {
  const double step = grid.cell_size * 0.5;
  double hi = top;
  double f_hi = sdf_at(grid, {x, y, hi});
  if (f_hi <= 0.0) return std::nullopt;
  for (double lo = top - step; lo >= bottom - 1e-12; lo -= step) {
    double f_lo = sdf_at(grid, {x, y, lo});
    if (f_lo <= 0.0) {
      double a = lo, b = hi;
      for (int it = 0; it < 40; ++it) {
        double m = 0.5 * (a + b);
        (sdf_at(grid, {x, y, m}) <= 0.0 ? a : b) = m;
      }
      return 0.5 * (a + b);
    }
    hi = lo;
  }
  return std::nullopt;
}

}  // namespace scenemotion
