#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/core/vec3.hpp"
#include "scenemotion/scene/mesh.hpp"

namespace scenemotion {

inline constexpr std::size_t kDefaultBasisSize = 256;
inline constexpr double kDefaultCageHalfExtent = 1.0;  // 2 m cubic cage

/// Fixed random points in the unit ball. The seed travels with trained models
/// so features can be reproduced at inference.
struct BasisSet {
  std::uint64_t seed = 0;
  std::vector<Vec3> points;
};

inline BasisSet make_basis(std::size_t count, std::uint64_t seed) {
  BasisSet basis{seed, {}};
  basis.points.reserve(count);
  Rng rng(seed);
  while (basis.points.size() < count) {
    Vec3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (squared_norm(p) <= 1.0) basis.points.push_back(p);
  }
  return basis;
}

using BpsFeature = std::vector<double>;

/// Basis-point-set encoding of the scene vertices inside the cube of
/// half-width `cage_half_extent` around `center`. Cropped points are scaled by
/// 1/(half_extent*sqrt(3)) so the cage fits the unit ball; entry k is the
/// distance from basis point k to the nearest cropped point, clamped to 1.
inline BpsFeature bps_encode(std::span<const Vec3> scene_points, const Vec3& center, double cage_half_extent,
                             const BasisSet& basis) {
  if (!(cage_half_extent > 0.0)) throw Error(ErrorKind::kInvalidArgument, "cage half extent must be positive");
  const double scale = 1.0 / (cage_half_extent * std::sqrt(3.0));
  std::vector<Vec3> crop;
  for (const Vec3& v : scene_points) {
    Vec3 d = v - center;
    if (std::abs(d.x) <= cage_half_extent && std::abs(d.y) <= cage_half_extent && std::abs(d.z) <= cage_half_extent) {
      crop.push_back(d * scale);
    }
  }
  BpsFeature out(basis.points.size(), 1.0);
  if (crop.empty()) return out;
  for (std::size_t k = 0; k < basis.points.size(); ++k) {
    const Vec3& b = basis.points[k];
    double best = 1.0;
    for (const Vec3& p : crop) {
      double d2 = squared_norm(p - b);
      if (d2 < best * best) best = std::sqrt(d2);
    }
    out[k] = std::min(best, 1.0);
  }
  return out;
}

inline BpsFeature bps_encode(const TriangleMesh& mesh, const Vec3& center, double cage_half_extent,
                             const BasisSet& basis) {
  return bps_encode(std::span<const Vec3>(mesh.vertices), center, cage_half_extent, basis);
}

}  // namespace scenemotion
