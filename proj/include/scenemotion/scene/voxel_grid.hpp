#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/core/vec3.hpp"
#include "scenemotion/scene/geometry.hpp"
#include "scenemotion/scene/mesh.hpp"

namespace scenemotion {

struct CellIndex {
  int i = 0;
  int j = 0;
  int k = 0;
  friend constexpr bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform occupancy grid with an approximate signed distance sampled at cell
/// centers. Linear index runs i fastest, then j, then k.
struct VoxelGrid {
  Vec3 origin{};
  double cell_size = 1.0;
  std::array<int, 3> dims{1, 1, 1};
  std::vector<std::uint8_t> occupied;
  std::vector<double> sdf;

  /// Grid with every cell set to the same occupancy and distance.
  static VoxelGrid filled(Vec3 origin, double cell_size, std::array<int, 3> dims, bool occupied_value,
                          double sdf_value) {
    if (!(cell_size > 0.0) || dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
      throw Error(ErrorKind::kInvalidArgument, "grid needs cell_size > 0 and positive dims");
    }
    VoxelGrid g;
    g.origin = origin;
    g.cell_size = cell_size;
    g.dims = dims;
    g.occupied.assign(g.cell_count(), occupied_value ? 1 : 0);
    g.sdf.assign(g.cell_count(), sdf_value);
    return g;
  }

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  }

  std::size_t linear(const CellIndex& c) const {
    return (static_cast<std::size_t>(c.k) * static_cast<std::size_t>(dims[1]) + static_cast<std::size_t>(c.j)) *
               static_cast<std::size_t>(dims[0]) +
           static_cast<std::size_t>(c.i);
  }

  CellIndex unravel(std::size_t idx) const {
    auto nx = static_cast<std::size_t>(dims[0]);
    auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
  }

  bool contains(const CellIndex& c) const {
    return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < dims[0] && c.j < dims[1] && c.k < dims[2];
  }

  bool is_occupied(const CellIndex& c) const { return occupied[linear(c)] != 0; }
  double sdf_value(const CellIndex& c) const { return sdf[linear(c)]; }

  Vec3 center(const CellIndex& c) const {
    return {origin.x + (c.i + 0.5) * cell_size, origin.y + (c.j + 0.5) * cell_size,
            origin.z + (c.k + 0.5) * cell_size};
  }

  Aabb bounds() const {
    return {origin, origin + Vec3{dims[0] * cell_size, dims[1] * cell_size, dims[2] * cell_size}};
  }

  /// Cell containing `p`, or nullopt outside the grid.
  std::optional<CellIndex> cell_of(const Vec3& p) const {
    CellIndex c{static_cast<int>(std::floor((p.x - origin.x) / cell_size)),
                static_cast<int>(std::floor((p.y - origin.y) / cell_size)),
                static_cast<int>(std::floor((p.z - origin.z) / cell_size))};
    if (!contains(c)) return std::nullopt;
    return c;
  }
};

namespace detail {

/// ceil() that ignores floating noise just above an integer.
inline int cells_spanning(double extent, double cell) {
  double n = extent / cell;
  return std::max(1, static_cast<int>(std::ceil(n - 1e-9)));
}

/// Number of +x ray crossings per cell of one grid row, by ray parity.
/// Returns true for each cell whose center lies inside the closed surface.
inline std::vector<bool> row_inside(const TriangleMesh& mesh, const std::vector<std::uint32_t>& candidates,
                                    const VoxelGrid& grid, int j, int k) {
  const int nx = grid.dims[0];
  Vec3 c0 = grid.center({0, j, k});
  const double eps = 1e-9;
  std::vector<double> hits;
  Rng jitter(mix_seed(0x5D1A7E, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)));

  double y = c0.y, z = c0.z;
  for (int attempt = 0; attempt < 9; ++attempt) {
    hits.clear();
    bool grazed = false;
    for (std::uint32_t f : candidates) {
      const Face& face = mesh.faces[f];
      const Vec3& a = mesh.vertices[face[0]];
      const Vec3& b = mesh.vertices[face[1]];
      const Vec3& c = mesh.vertices[face[2]];
      double area = (b.y - a.y) * (c.z - a.z) - (c.y - a.y) * (b.z - a.z);
      if (std::abs(area) < 1e-18) continue;  // parallel to the ray
      double w1 = ((y - a.y) * (c.z - a.z) - (c.y - a.y) * (z - a.z)) / area;
      double w2 = ((b.y - a.y) * (z - a.z) - (y - a.y) * (b.z - a.z)) / area;
      double w0 = 1.0 - w1 - w2;
      double wmin = std::min({w0, w1, w2});
      if (wmin < -eps) continue;
      if (wmin <= eps) {
        grazed = true;
        break;
      }
      hits.push_back(w0 * a.x + w1 * b.x + w2 * c.x);
    }
    if (!grazed) break;
    // Edge-grazing: nudge the ray inside the row and recount.
    y = c0.y + grid.cell_size * 1e-4 * (jitter.uniform() - 0.5);
    z = c0.z + grid.cell_size * 1e-4 * (jitter.uniform() - 0.5);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<bool> inside(static_cast<std::size_t>(nx), false);
  std::size_t beyond = hits.size();
  std::size_t h = 0;
  for (int i = 0; i < nx; ++i) {
    double x = grid.center({i, j, k}).x;
    while (h < hits.size() && hits[h] <= x) ++h;
    beyond = hits.size() - h;
    inside[static_cast<std::size_t>(i)] = (beyond % 2) == 1;
  }
  return inside;
}

}  // namespace detail

/// Voxelizes a mesh: the grid covers the mesh bounds padded by one cell per
/// side; a cell is occupied iff some triangle touches its closed box; sdf is
/// the nearest-triangle distance at the cell center, negated inside when the
/// mesh is a closed manifold (ray parity along +x), unsigned otherwise.
inline VoxelGrid voxelize(const TriangleMesh& mesh, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(ErrorKind::kInvalidArgument, "cell_size must be positive");
  }
  if (mesh.faces.empty()) throw Error(ErrorKind::kScene, "mesh has no faces");
  mesh.validate();
  Aabb box = mesh.bounds();
  Vec3 ext = box.extent();
  if (ext.x <= 0.0 && ext.y <= 0.0 && ext.z <= 0.0) {
    throw Error(ErrorKind::kScene, "mesh bounding box is degenerate");
  }

  VoxelGrid grid;
  grid.cell_size = cell_size;
  grid.origin = box.lo - Vec3{cell_size, cell_size, cell_size};
  for (int a = 0; a < 3; ++a) grid.dims[a] = detail::cells_spanning(ext[a], cell_size) + 2;
  grid.occupied.assign(grid.cell_count(), 0);
  grid.sdf.assign(grid.cell_count(), 0.0);

  const Vec3 half{cell_size * 0.5, cell_size * 0.5, cell_size * 0.5};
  auto index_range = [&](double lo, double hi, int axis) {
    int a = static_cast<int>(std::floor((lo - grid.origin[axis]) / cell_size)) - 1;
    int b = static_cast<int>(std::floor((hi - grid.origin[axis]) / cell_size)) + 1;
    return std::pair{std::clamp(a, 0, grid.dims[axis] - 1), std::clamp(b, 0, grid.dims[axis] - 1)};
  };

  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    Vec3 lo = component_min(a, component_min(b, c));
    Vec3 hi = component_max(a, component_max(b, c));
    auto [i0, i1] = index_range(lo.x, hi.x, 0);
    auto [j0, j1] = index_range(lo.y, hi.y, 1);
    auto [k0, k1] = index_range(lo.z, hi.z, 2);
    for (int k = k0; k <= k1; ++k) {
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
          std::size_t idx = grid.linear({i, j, k});
          if (grid.occupied[idx]) continue;
          if (geometry::triangle_box_overlap(grid.center({i, j, k}), half, a, b, c)) grid.occupied[idx] = 1;
        }
      }
    }
  }

  geometry::TriangleBvh bvh(mesh);
  for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
    grid.sdf[idx] = bvh.nearest_distance(grid.center(grid.unravel(idx)));
  }

  if (geometry::is_closed_manifold(mesh)) {
    const int ny = grid.dims[1], nz = grid.dims[2];
    std::vector<std::vector<std::uint32_t>> rows(static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz));
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
      const Face& f = mesh.faces[fi];
      const Vec3& a = mesh.vertices[f[0]];
      const Vec3& b = mesh.vertices[f[1]];
      const Vec3& c = mesh.vertices[f[2]];
      double ylo = std::min({a.y, b.y, c.y}), yhi = std::max({a.y, b.y, c.y});
      double zlo = std::min({a.z, b.z, c.z}), zhi = std::max({a.z, b.z, c.z});
      auto [j0, j1] = index_range(ylo, yhi, 1);
      auto [k0, k1] = index_range(zlo, zhi, 2);
      for (int k = k0; k <= k1; ++k) {
        for (int j = j0; j <= j1; ++j) {
          rows[static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)].push_back(
              static_cast<std::uint32_t>(fi));
        }
      }
    }
    for (int k = 0; k < nz; ++k) {
      for (int j = 0; j < ny; ++j) {
        const auto& cand = rows[static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)];
        if (cand.empty()) continue;
        std::vector<bool> inside = detail::row_inside(mesh, cand, grid, j, k);
        for (int i = 0; i < grid.dims[0]; ++i) {
          if (inside[static_cast<std::size_t>(i)]) {
            std::size_t idx = grid.linear({i, j, k});
            grid.sdf[idx] = -grid.sdf[idx];
          }
        }
      }
    }
  }
  return grid;
}

/// Trilinear interpolation of the cell-center distances. Outside the hull of
/// cell centers the value at the nearest hull point is extended by the
/// Euclidean distance to that point.
inline double sdf_at(const VoxelGrid& grid, const Vec3& p) {
  double u[3], q[3];
  int i0[3];
  double frac[3];
  double outside2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    u[a] = (p[a] - grid.origin[a]) / grid.cell_size - 0.5;
    q[a] = std::clamp(u[a], 0.0, static_cast<double>(grid.dims[a] - 1));
    double d = (u[a] - q[a]) * grid.cell_size;
    outside2 += d * d;
    if (grid.dims[a] == 1) {
      i0[a] = 0;
      frac[a] = 0.0;
    } else {
      i0[a] = std::min(static_cast<int>(std::floor(q[a])), grid.dims[a] - 2);
      frac[a] = q[a] - i0[a];
    }
  }
  double value = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    int di = corner & 1, dj = (corner >> 1) & 1, dk = (corner >> 2) & 1;
    double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) * (dk ? frac[2] : 1.0 - frac[2]);
    if (w == 0.0) continue;
    CellIndex c{std::min(i0[0] + di, grid.dims[0] - 1), std::min(i0[1] + dj, grid.dims[1] - 1),
                std::min(i0[2] + dk, grid.dims[2] - 1)};
    value += w * grid.sdf[grid.linear(c)];
  }
  return value + std::sqrt(outside2);
}

/// Central-difference gradient of `sdf_at` with step `h`.
inline Vec3 sdf_gradient(const VoxelGrid& grid, const Vec3& p, double h) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 lo = p, hi = p;
    lo[a] -= h;
    hi[a] += h;
    g[a] = (sdf_at(grid, hi) - sdf_at(grid, lo)) / (2.0 * h);
  }
  return g;
}

}  // namespace scenemotion
