#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"

namespace scenemotion {

inline constexpr int kDefaultClusterCount = 20;

struct ClusterReport {
  int k = 0;
  std::vector<int> assignments;
  std::vector<std::vector<double>> centers;
  std::vector<int> sizes;
  double entropy = 0.0;        // of cluster-size fractions, nats
  double mean_distance = 0.0;  // mean L2 from each sample to its center
  int iterations = 0;
  std::vector<double> inertia;  // total squared distance after each Lloyd iteration
};

/// -sum p ln p over the non-empty fractions.
inline double size_entropy(std::span<const int> sizes) {
  double total = 0.0;
  for (int s : sizes) total += s;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (int s : sizes) {
    if (s <= 0) continue;
    double p = s / total;
    h -= p * std::log(p);
  }
  return h;
}

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` is reached. Distance ties go to the lower cluster
/// index; an empty cluster keeps its previous center.
inline ClusterReport kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                            int max_iter = 100) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "K must be at least 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::kInvalidArgument, "fewer points than K (" + std::to_string(points.size()) + " < " +
                                                 std::to_string(k) + ")");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw Error(ErrorKind::kDimension, "points have unequal dimensions");
  }
  const std::size_t n = points.size();

  Rng rng(seed);
  ClusterReport r;
  r.k = k;
  r.centers.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = detail::squared_distance(points[i], r.centers[0]);
  while (r.centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total, acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    r.centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], detail::squared_distance(points[i], r.centers.back()));
  }

  r.assignments.assign(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = detail::squared_distance(points[i], r.centers[static_cast<std::size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (r.assignments[i] != best) changed = true;
      r.assignments[i] = best;
      inertia += bd;
    }
    r.iterations = it + 1;
    if (!changed && it > 0) {
      r.inertia.push_back(inertia);
      break;
    }
    std::vector<std::vector<double>> sum(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(r.assignments[i]);
      ++count[c];
      for (std::size_t a = 0; a < dim; ++a) sum[c][a] += points[i][a];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (count[c] == 0) continue;
      for (std::size_t a = 0; a < dim; ++a) r.centers[c][a] = sum[c][a] / count[c];
    }
    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += detail::squared_distance(points[i], r.centers[static_cast<std::size_t>(r.assignments[i])]);
    }
    r.inertia.push_back(inertia);
  }

  r.sizes.assign(static_cast<std::size_t>(k), 0);
  double dist = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ++r.sizes[static_cast<std::size_t>(r.assignments[i])];
    dist += std::sqrt(detail::squared_distance(points[i], r.centers[static_cast<std::size_t>(r.assignments[i])]));
  }
  r.entropy = size_entropy(r.sizes);
  r.mean_distance = dist / static_cast<double>(n);
  return r;
}

enum class DiversityMode { kFull, kPosition };

inline std::string_view to_string(DiversityMode m) { return m == DiversityMode::kFull ? "full" : "position"; }

/// Centers every coordinate of the block [begin, end) and scales the block so
/// the sum of its coordinate variances is 1. A constant block stays at zero.
inline void standardize_block(std::vector<std::vector<double>>& rows, std::size_t begin, std::size_t end) {
  if (rows.empty()) return;
  const double n = static_cast<double>(rows.size());
  double total_var = 0.0;
  for (std::size_t a = begin; a < end; ++a) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[a];
    mean /= n;
    double var = 0.0;
    for (auto& r : rows) {
      r[a] -= mean;
      var += r[a] * r[a];
    }
    total_var += var / n;
  }
  if (total_var <= 1e-300) return;
  const double s = 1.0 / std::sqrt(total_var);
  for (auto& r : rows) {
    for (std::size_t a = begin; a < end; ++a) r[a] *= s;
  }
}

/// Feature rows (theta, t, phi) or (t, phi), each block standardized.
inline std::vector<std::vector<double>> anchor_features(std::span<const Anchor> anchors, DiversityMode mode) {
  const bool full = mode == DiversityMode::kFull;
  const std::size_t off = full ? kPoseDim : 0;
  std::vector<std::vector<double>> rows;
  rows.reserve(anchors.size());
  for (const Anchor& a : anchors) {
    std::vector<double> r;
    if (full) r.assign(a.theta.begin(), a.theta.end());
    r.insert(r.end(), {a.t.x, a.t.y, a.t.z});
    r.insert(r.end(), a.phi.begin(), a.phi.end());
    rows.push_back(std::move(r));
  }
  if (full) standardize_block(rows, 0, off);
  standardize_block(rows, off, off + 3);
  standardize_block(rows, off + 3, off + 9);
  return rows;
}

inline ClusterReport anchor_diversity(std::span<const Anchor> anchors, DiversityMode mode, int k = kDefaultClusterCount,
                                      std::uint64_t seed = 0) {
  return kmeans(anchor_features(anchors, mode), k, seed);
}

}  // namespace scenemotion
