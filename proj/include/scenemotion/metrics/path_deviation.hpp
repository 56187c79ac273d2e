#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/vec3.hpp"
#include "scenemotion/planner/astar.hpp"

namespace scenemotion {

inline constexpr std::array<double, 5> kDeviationFractions{1.0 / 6.0, 1.0 / 3.0, 1.0 / 2.0, 2.0 / 3.0, 5.0 / 6.0};

struct PathDeviationReport {
  std::array<double, 5> std{};  // meters, in kDeviationFractions order
};

/// Point at fraction f of the polyline's arc length (linear interpolation).
inline Vec3 point_at_fraction(std::span<const Vec3> pts, double f) {
  if (pts.empty()) throw Error(ErrorKind::kInvalidArgument, "empty path");
  double L = 0.0;
  for (std::size_t s = 1; s < pts.size(); ++s) L += distance(pts[s - 1], pts[s]);
  if (L <= 0.0) return pts.front();
  double target = f * L, acc = 0.0;
  for (std::size_t s = 1; s < pts.size(); ++s) {
    double d = distance(pts[s - 1], pts[s]);
    if (acc + d >= target && d > 0.0) return pts[s - 1] + (pts[s] - pts[s - 1]) * ((target - acc) / d);
    acc += d;
  }
  return pts.back();
}

/// Population standard deviation, over the samples, of each sample's
/// distance to the reference at each fraction of arc length.
inline PathDeviationReport path_deviation_std(const std::vector<std::vector<Vec3>>& samples, std::span<const Vec3> reference) {
  if (samples.size() < 2) throw Error(ErrorKind::kInvalidArgument, "path deviation needs at least 2 sampled paths");
  if (reference.empty()) throw Error(ErrorKind::kInvalidArgument, "empty reference path");
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& p = samples[s];
    if (p.empty() || distance(p.front(), reference.front()) > 1e-9 || distance(p.back(), reference.back()) > 1e-9) {
      throw Error(ErrorKind::kInvalidArgument, "sampled path " + std::to_string(s) + " has different endpoints than the reference");
    }
  }
  PathDeviationReport r;
  for (std::size_t f = 0; f < kDeviationFractions.size(); ++f) {
    Vec3 ref = point_at_fraction(reference, kDeviationFractions[f]);
    double mean = 0.0, sq = 0.0;
    std::vector<double> d;
    for (const auto& p : samples) d.push_back(distance(point_at_fraction(p, kDeviationFractions[f]), ref));
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    for (double v : d) sq += (v - mean) * (v - mean);
    r.std[f] = std::sqrt(sq / static_cast<double>(d.size()));
  }
  return r;
}

inline PathDeviationReport path_deviation_std(const WalkableMap& map, const std::vector<GridPath>& samples,
                                              const GridPath& reference) {
  std::vector<std::vector<Vec3>> pts;
  for (const auto& p : samples) pts.push_back(path_points(map, p));
  return path_deviation_std(pts, path_points(map, reference));
}

}  // namespace scenemotion
