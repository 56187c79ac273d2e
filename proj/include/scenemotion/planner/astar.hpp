#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/planner/walkable.hpp"

namespace scenemotion {

enum class FieldKind { kStandard, kRandom, kShared, kMapper };

inline std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::kStandard: return "standard";
    case FieldKind::kRandom: return "random";
    case FieldKind::kShared: return "shared";
    case FieldKind::kMapper: return "mapper";
  }
  return "standard";
}

inline FieldKind field_kind_from_string(std::string_view s) {
  for (FieldKind k : {FieldKind::kStandard, FieldKind::kRandom, FieldKind::kShared, FieldKind::kMapper}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::kConfig, "unknown field kind '" + std::string(s) + "' (expected standard, random, shared or mapper)");
}

/// Feasibility m(p, q) in [0, 1] for every cell p and direction to q.
struct CostField {
  FieldKind kind = FieldKind::kStandard;
  std::uint64_t seed = 0;
  int nx = 0;
  int ny = 0;
  std::vector<double> m;  // (j * nx + i) * 8 + direction

  double value(const Cell2& p, int direction) const {
    return m[(static_cast<std::size_t>(p.j) * nx + static_cast<std::size_t>(p.i)) * kDirectionCount +
             static_cast<std::size_t>(direction)];
  }
};

inline CostField field_standard(const WalkableMap& map) {
  return {FieldKind::kStandard, 0, map.nx, map.ny,
          std::vector<double>(static_cast<std::size_t>(map.nx) * map.ny * kDirectionCount, 1.0)};
}

/// Independent uniform [0, 1) value per (cell, direction), drawn in index order.
inline CostField field_random(const WalkableMap& map, std::uint64_t seed) {
  CostField f{FieldKind::kRandom, seed, map.nx, map.ny, {}};
  f.m.resize(static_cast<std::size_t>(map.nx) * map.ny * kDirectionCount);
  Rng rng(seed);
  for (double& v : f.m) v = rng.uniform();
  return f;
}

/// One uniform 8-vector shared by all cells.
inline CostField field_shared(const WalkableMap& map, std::uint64_t seed) {
  CostField f{FieldKind::kShared, seed, map.nx, map.ny, {}};
  Rng rng(seed);
  std::array<double, kDirectionCount> u{};
  for (double& v : u) v = rng.uniform();
  f.m.resize(static_cast<std::size_t>(map.nx) * map.ny * kDirectionCount);
  for (std::size_t i = 0; i < f.m.size(); ++i) f.m[i] = u[i % kDirectionCount];
  return f;
}

struct GridPath {
  std::vector<Cell2> cells;
  double cost = 0.0;
};

inline double step_length(int direction) { return direction % 2 == 0 ? 1.0 : std::numbers::sqrt2; }

/// Cost of a cell sequence: axial steps + sqrt(2) * diagonal steps +
/// sum of (1 - m). Summed in this fixed grouping so equal step counts give
/// bit-identical costs.
inline double path_cost(const std::vector<Cell2>& cells, const CostField& field) {
  long axial = 0, diagonal = 0;
  double extra = 0.0;
  for (std::size_t s = 1; s < cells.size(); ++s) {
    int d = direction_index(cells[s].i - cells[s - 1].i, cells[s].j - cells[s - 1].j);
    (d % 2 == 0 ? axial : diagonal) += 1;
    extra += 1.0 - field.value(cells[s - 1], d);
  }
  return static_cast<double>(axial) + static_cast<double>(diagonal) * std::numbers::sqrt2 + extra;
}

/// A* over the walkable map with step cost |p - q| + (1 - m(p, q)) in cell
/// units and the Euclidean heuristic. Open-list ties are broken by
/// (f, h, linear index).
inline GridPath astar(const WalkableMap& map, const Cell2& start, const Cell2& goal, const CostField& field) {
  if (!map.is_walkable(start)) throw Error(ErrorKind::kInvalidArgument, "start cell is not walkable");
  if (!map.is_walkable(goal)) throw Error(ErrorKind::kInvalidArgument, "goal cell is not walkable");
  if (field.nx != map.nx || field.ny != map.ny) throw Error(ErrorKind::kDimension, "cost field does not match map");

  auto heuristic = [&](const Cell2& c) { return std::hypot(double(c.i - goal.i), double(c.j - goal.j)); };
  const std::size_t n = map.walkable.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n, inf);
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  using Entry = std::tuple<double, double, std::size_t>;  // f, h, index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const std::size_t s = map.index(start), t = map.index(goal);
  g[s] = 0.0;
  open.emplace(heuristic(start), heuristic(start), s);
  while (!open.empty()) {
    auto [f, h, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    if (idx == t) break;
    const Cell2 p = map.cell(idx);
    for (int d = 0; d < kDirectionCount; ++d) {
      Cell2 q{p.i + kDirections[d][0], p.j + kDirections[d][1]};
      if (!map.is_walkable(q)) continue;
      const std::size_t qi = map.index(q);
      if (closed[qi]) continue;
      double cand = g[idx] + step_length(d) + (1.0 - field.value(p, d));
      if (cand < g[qi]) {
        g[qi] = cand;
        parent[qi] = static_cast<std::int64_t>(idx);
        double hq = heuristic(q);
        open.emplace(cand + hq, hq, qi);
      }
    }
  }
  if (!closed[t]) {
    throw NoPathError("goal (" + std::to_string(goal.i) + "," + std::to_string(goal.j) + ") unreachable from (" +
                      std::to_string(start.i) + "," + std::to_string(start.j) + ")");
  }
  GridPath path;
  for (std::int64_t v = static_cast<std::int64_t>(t); v != -1; v = parent[static_cast<std::size_t>(v)]) {
    path.cells.push_back(map.cell(static_cast<std::size_t>(v)));
  }
  std::reverse(path.cells.begin(), path.cells.end());
  path.cost = path_cost(path.cells, field);
  return path;
}

/// Cell centers of a path at floor height.
inline std::vector<Vec3> path_points(const WalkableMap& map, const GridPath& path) {
  std::vector<Vec3> pts;
  pts.reserve(path.cells.size());
  for (const Cell2& c : path.cells) pts.push_back(map.position(c));
  return pts;
}

}  // namespace scenemotion
