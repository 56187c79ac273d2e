#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/anchors/body.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/core/rotation.hpp"
#include "scenemotion/scene/scene.hpp"

namespace scenemotion {

inline constexpr int kOrientationCount = 8;

inline double orientation_yaw(int k) { return k * (std::numbers::pi / 4.0); }

struct PlacementWeights {
  double penetration = 1.0;        // w_p
  double diversity = 0.5;          // w_d
  double contact_tolerance = 0.05; // tau, meters
  double diversity_sigma = 1.0;    // sigma_d, meters
};

struct PlacementOptions {
  PlacementWeights weights;
  int top_k = 20;
  double temperature = 0.1;
  double sample_spacing = 0.1;  // capsule axis station spacing
  double max_support_height = 1.2;  // sit/lie: supporting surface at most this far above the floor layer
  bool locomotion_on_floor = true;  // stand/walk/squat: supported by the floor layer only
};

inline bool is_locomotion(ActionLabel a) {
  return a == ActionLabel::kStand || a == ActionLabel::kWalk || a == ActionLabel::kSquat;
}

struct PlacementCandidate {
  CellIndex cell;
  int orientation_index = 0;
  double yaw = 0.0;
  double affordance = 0.0;
  double penetration = 0.0;
  double diversity_penalty = 0.0;
  double total_score = 0.0;
};

/// One candidate per (unoccupied cell, orientation), in cell linear order.
inline std::vector<PlacementCandidate> enumerate_candidates(const VoxelGrid& grid) {
  std::vector<PlacementCandidate> out;
  for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
    if (grid.occupied[idx]) continue;
    CellIndex c = grid.unravel(idx);
    for (int k = 0; k < kOrientationCount; ++k) out.push_back({c, k, orientation_yaw(k)});
  }
  return out;
}

/// Sum over designated contacts of exp(-sdf^2 / (2 tau^2)).
inline double affordance_score(std::span<const Vec3> world_contacts, const VoxelGrid& grid, double tau) {
  double s = 0.0;
  for (const Vec3& p : world_contacts) {
    double d = sdf_at(grid, p);
    s += std::exp(-d * d / (2.0 * tau * tau));
  }
  return s;
}

/// Distances this close to zero are interpolation round-off on a surface.
inline constexpr double kPenetrationNoise = 1e-12;

/// Sum over capsule sample points of max(0, -sdf).
inline double penetration_score(std::span<const Vec3> world_points, const VoxelGrid& grid) {
  double s = 0.0;
  for (const Vec3& p : world_points) {
    double d = sdf_at(grid, p);
    if (d < -kPenetrationNoise) s -= d;
  }
  return s;
}

/// Gaussian-kernel sum over previously placed anchors with the same action.
inline double diversity_penalty(const Vec3& t, ActionLabel action, std::span<const Anchor> placed, double sigma) {
  double s = 0.0;
  for (const Anchor& a : placed) {
    if (a.action != action) continue;
    s += std::exp(-squared_norm(t - a.t) / (2.0 * sigma * sigma));
  }
  return s;
}

inline void finalize_total(PlacementCandidate& c, const PlacementWeights& w) {
  c.total_score = c.affordance - w.penetration * c.penetration - w.diversity * c.diversity_penalty;
}

/// Fills affordance and penetration for the body placed at the candidate's
/// cell center with the candidate's yaw.
inline void score_candidate(PlacementCandidate& c, const ProxyBody& body, const VoxelGrid& grid,
                            const PlacementWeights& w = {}, double sample_spacing = 0.1) {
  Mat3 r = rotation_from_6d(rot6_from_yaw(c.yaw));
  Vec3 t = grid.center(c.cell);
  c.affordance = affordance_score(to_world(r, t, body.designated_contacts()), grid, w.contact_tolerance);
  c.penetration = penetration_score(to_world(r, t, body.sample_points(sample_spacing)), grid);
  finalize_total(c, w);
}

/// True when an occupied cell lies in the candidate's column below it, no
/// deeper than the body's lowest designated contact plus two cells, and its
/// top is at most `max_top_layer`.
inline bool has_support(const VoxelGrid& grid, const CellIndex& c, double contact_depth, int max_top_layer) {
  const int reach = static_cast<int>(std::ceil(contact_depth / grid.cell_size)) + 2;
  for (int k = c.k - 1; k >= std::max(0, c.k - reach); --k) {
    if (grid.is_occupied({c.i, c.j, k})) return k + 1 <= max_top_layer;
  }
  return false;
}

struct PlacementResult {
  Anchor anchor;
  PlacementCandidate chosen;
  std::vector<PlacementCandidate> top;  // best-first, ties by (cell index, orientation)
};

namespace detail {

inline bool better(const PlacementCandidate& a, std::size_t ia, const PlacementCandidate& b, std::size_t ib) {
  if (a.total_score != b.total_score) return a.total_score > b.total_score;
  if (ia != ib) return ia < ib;
  return a.orientation_index < b.orientation_index;
}

}  // namespace detail

/// Scores every supported candidate, keeps the exact top_k by total score and
/// draws one by softmax(total / temperature). Penetration is only evaluated
/// while a candidate's bound (affordance - w_d * diversity) can still enter
/// the top_k, which keeps the search exact.
inline PlacementResult place_anchor(const PoseVector& theta, ActionLabel action, const VoxelGrid& grid,
                                    std::span<const Anchor> placed, std::uint64_t seed,
                                    const PlacementOptions& opt = {}) {
  if (opt.top_k < 1) throw Error(ErrorKind::kConfig, "top_k must be at least 1");
  if (!(opt.temperature > 0.0)) throw Error(ErrorKind::kConfig, "placement temperature must be positive");
  const ProxyBody body = proxy_body(theta, action);
  const std::vector<Vec3> contacts = body.designated_contacts();
  const std::vector<Vec3> samples = body.sample_points(opt.sample_spacing);
  const double depth = -lowest_contact_offset(body);
  const int floor_k = floor_layer(grid);
  const int max_top = (opt.locomotion_on_floor && is_locomotion(action))
                          ? floor_k
                          : floor_k + static_cast<int>(std::floor(opt.max_support_height / grid.cell_size + 1e-9));
  const auto& w = opt.weights;

  std::array<std::vector<Vec3>, kOrientationCount> rc, rs;
  for (int k = 0; k < kOrientationCount; ++k) {
    Mat3 r = rotation_from_6d(rot6_from_yaw(orientation_yaw(k)));
    rc[k] = to_world(r, Vec3{}, contacts);
    rs[k] = to_world(r, Vec3{}, samples);
  }

  struct Bound {
    double upper;
    std::size_t cell;
    int orientation;
    double affordance;
    double diversity;
  };
  std::vector<Bound> bounds;
  std::vector<Vec3> pts;
  for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
    if (grid.occupied[idx]) continue;
    CellIndex c = grid.unravel(idx);
    if (!has_support(grid, c, depth, max_top)) continue;
    Vec3 t = grid.center(c);
    double div = diversity_penalty(t, action, placed, w.diversity_sigma);
    for (int k = 0; k < kOrientationCount; ++k) {
      pts.clear();
      for (const Vec3& p : rc[k]) pts.push_back(p + t);
      double aff = affordance_score(pts, grid, w.contact_tolerance);
      bounds.push_back({aff - w.diversity * div, idx, k, aff, div});
    }
  }
  if (bounds.empty()) throw Error(ErrorKind::kScene, std::string("scene has no placement for action ") +
                                                         std::string(to_string(action)));
  std::sort(bounds.begin(), bounds.end(), [](const Bound& a, const Bound& b) {
    if (a.upper != b.upper) return a.upper > b.upper;
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.orientation < b.orientation;
  });

  struct Scored {
    PlacementCandidate cand;
    std::size_t cell;
  };
  auto worse = [](const Scored& a, const Scored& b) { return detail::better(a.cand, a.cell, b.cand, b.cell); };
  std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> heap(worse);  // top = worst kept
  const auto k_max = static_cast<std::size_t>(opt.top_k);
  for (const Bound& b : bounds) {
    if (heap.size() == k_max && b.upper < heap.top().cand.total_score) break;
    PlacementCandidate cand{grid.unravel(b.cell), b.orientation, orientation_yaw(b.orientation), b.affordance, 0.0,
                            b.diversity, 0.0};
    Vec3 t = grid.center(cand.cell);
    pts.clear();
    for (const Vec3& p : rs[b.orientation]) pts.push_back(p + t);
    cand.penetration = penetration_score(pts, grid);
    finalize_total(cand, w);
    if (!std::isfinite(cand.total_score)) continue;
    Scored s{cand, b.cell};
    if (heap.size() < k_max) {
      heap.push(s);
    } else if (detail::better(s.cand, s.cell, heap.top().cand, heap.top().cell)) {
      heap.pop();
      heap.push(s);
    }
  }
  if (heap.empty()) throw Error(ErrorKind::kScene, std::string("scene has no placement for action ") +
                                                       std::string(to_string(action)));

  std::vector<Scored> top;
  while (!heap.empty()) {
    top.push_back(heap.top());
    heap.pop();
  }
  std::reverse(top.begin(), top.end());

  std::size_t pick = 0;
  if (top.size() > 1) {
    const double best = top.front().cand.total_score;
    std::vector<double> weight;
    double sum = 0.0;
    for (const Scored& s : top) {
      weight.push_back(std::exp((s.cand.total_score - best) / opt.temperature));
      sum += weight.back();
    }
    Rng rng(seed);
    double u = rng.uniform() * sum;
    pick = top.size() - 1;
    for (std::size_t i = 0; i < top.size(); ++i) {
      if (u < weight[i]) {
        pick = i;
        break;
      }
      u -= weight[i];
    }
  }

  PlacementResult result;
  for (const Scored& s : top) result.top.push_back(s.cand);
  result.chosen = top[pick].cand;
  result.anchor = Anchor{grid.center(result.chosen.cell), rot6_from_yaw(result.chosen.yaw), theta, action};
  return result;
}

struct AnchorOptimizeOptions {
  int iterations = 10;
  double regularization = 1.0;  // w_r
  PlacementWeights weights;
  double sample_spacing = 0.1;
};

/// E(t) = -affordance + w_p * penetration + w_r * |t - t0|^2 for the anchor's body at t.
inline double anchor_energy(const ProxyBody& body, const Mat3& r, const Vec3& t, const Vec3& t0,
                            const VoxelGrid& grid, const AnchorOptimizeOptions& opt) {
  auto contacts = to_world(r, t, body.designated_contacts());
  auto samples = to_world(r, t, body.sample_points(opt.sample_spacing));
  return -affordance_score(contacts, grid, opt.weights.contact_tolerance) +
         opt.weights.penetration * penetration_score(samples, grid) + opt.regularization * squared_norm(t - t0);
}

struct AnchorOptimizeResult {
  Anchor anchor;
  std::vector<double> energy;  // E at the start and after every accepted step
};

/// Backtracking gradient descent on `anchor_energy` over t only; the gradient
/// is a central difference with step cell_size / 4.
inline AnchorOptimizeResult optimize_anchor(const Anchor& anchor, const VoxelGrid& grid,
                                            const AnchorOptimizeOptions& opt = {}) {
  const ProxyBody body = proxy_body(anchor.theta, anchor.action);
  const Mat3 r = rotation_from_6d(anchor.phi);
  const Vec3 t0 = anchor.t;
  const double h = grid.cell_size / 4.0;
  auto energy = [&](const Vec3& t) { return anchor_energy(body, r, t, t0, grid, opt); };

  AnchorOptimizeResult out{anchor, {}};
  Vec3 t = t0;
  double e = energy(t);
  out.energy.push_back(e);
  for (int it = 0; it < opt.iterations; ++it) {
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
      Vec3 lo = t, hi = t;
      lo[a] -= h;
      hi[a] += h;
      g[a] = (energy(hi) - energy(lo)) / (2.0 * h);
    }
    const double g2 = squared_norm(g);
    if (!(g2 > 1e-18)) break;
    double step = grid.cell_size / std::sqrt(g2);  // first trial moves one cell
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vec3 cand = t - g * step;
      double ec = energy(cand);
      if (ec <= e - 1e-4 * step * g2) {
        t = cand;
        e = ec;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    out.energy.push_back(e);
  }
  out.anchor.t = t;
  return out;
}

}  // namespace scenemotion
