#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "scenemotion/core/vec3.hpp"
#include "scenemotion/scene/mesh.hpp"

namespace scenemotion::geometry {

/// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  Vec3 bp = p - b;
  double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return a + ab * v;
  }

  Vec3 cp = p - c;
  double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return a + ac * w;
  }

  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }

  double denom = va + vb + vc;
  if (denom == 0.0) {
    // Degenerate (zero-area) triangle: nearest of its three edges.
    auto seg = [&](const Vec3& s0, const Vec3& s1) {
      Vec3 d = s1 - s0;
      double len2 = dot(d, d);
      double t = len2 > 0.0 ? std::clamp(dot(p - s0, d) / len2, 0.0, 1.0) : 0.0;
      return s0 + d * t;
    };
    Vec3 best = seg(a, b);
    for (Vec3 q : {seg(b, c), seg(c, a)}) {
      if (squared_norm(q - p) < squared_norm(best - p)) best = q;
    }
    return best;
  }
  double v = vb / denom;
  double w = vc / denom;
  return a + ab * v + ac * w;
}

inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  return distance(p, closest_point_on_triangle(p, a, b, c));
}

/// Separating-axis test of a triangle against a closed axis-aligned box
/// (Akenine-Moller). Touching counts as overlap.
inline bool triangle_box_overlap(const Vec3& box_center, const Vec3& half, const Vec3& t0, const Vec3& t1,
                                 const Vec3& t2) {
  const Vec3 v0 = t0 - box_center, v1 = t1 - box_center, v2 = t2 - box_center;
  const Vec3 e[3] = {v1 - v0, v2 - v1, v0 - v2};
  const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  auto separated = [&](const Vec3& axis) {
    double p0 = dot(v0, axis), p1 = dot(v1, axis), p2 = dot(v2, axis);
    double r = half.x * std::abs(axis.x) + half.y * std::abs(axis.y) + half.z * std::abs(axis.z);
    double lo = std::min({p0, p1, p2});
    double hi = std::max({p0, p1, p2});
    return lo > r || hi < -r;
  };

  for (const Vec3& ax : axes) {
    if (separated(ax)) return false;
  }
  Vec3 n = cross(e[0], e[1]);
  if (squared_norm(n) > 0.0 && separated(n)) return false;
  for (const Vec3& edge : e) {
    for (const Vec3& ax : axes) {
      Vec3 a = cross(edge, ax);
      if (squared_norm(a) > 1e-300 && separated(a)) return false;
    }
  }
  return true;
}

/// Bounding-volume hierarchy over mesh triangles for nearest-distance queries.
class TriangleBvh {
 public:
  explicit TriangleBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
    const std::size_t n = mesh.faces.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.resize(n);
    boxes_.resize(n);
    for (std::size_t f = 0; f < n; ++f) {
      const auto& [a, b, c] = corners(static_cast<std::uint32_t>(f));
      centroids_[f] = (a + b + c) / 3.0;
      Aabb box{a, a};
      box.expand(b);
      box.expand(c);
      boxes_[f] = box;
    }
    if (n > 0) build(0, n);
  }

  /// Euclidean distance from p to the nearest triangle; +inf for an empty mesh.
  double nearest_distance(const Vec3& p) const {
    if (nodes_.empty()) return std::numeric_limits<double>::infinity();
    double best2 = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (node.box.squared_distance(p) >= best2) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          const auto& [a, b, c] = corners(order_[i]);
          double d2 = squared_norm(closest_point_on_triangle(p, a, b, c) - p);
          best2 = std::min(best2, d2);
        }
      } else {
        // Visit the nearer child first.
        const Node& l = nodes_[node.left];
        const Node& r = nodes_[node.right];
        double dl = l.box.squared_distance(p), dr = r.box.squared_distance(p);
        if (dl <= dr) {
          stack.push_back(node.right);
          stack.push_back(node.left);
        } else {
          stack.push_back(node.left);
          stack.push_back(node.right);
        }
      }
    }
    return std::sqrt(best2);
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t left = 0, right = 0;
    std::uint32_t first = 0, count = 0;
  };
  static constexpr std::size_t kLeafSize = 4;

  std::array<Vec3, 3> corners(std::uint32_t f) const {
    const Face& face = mesh_->faces[f];
    return {mesh_->vertices[face[0]], mesh_->vertices[face[1]], mesh_->vertices[face[2]]};
  }

  std::uint32_t build(std::size_t first, std::size_t last) {
    auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box = boxes_[order_[first]];
    Aabb cbox{centroids_[order_[first]], centroids_[order_[first]]};
    for (std::size_t i = first; i < last; ++i) {
      box.expand(boxes_[order_[i]].lo);
      box.expand(boxes_[order_[i]].hi);
      cbox.expand(centroids_[order_[i]]);
    }
    nodes_[index].box = box;
    if (last - first <= kLeafSize) {
      nodes_[index].first = static_cast<std::uint32_t>(first);
      nodes_[index].count = static_cast<std::uint32_t>(last - first);
      return index;
    }
    Vec3 ext = cbox.extent();
    int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    std::size_t mid = first + (last - first) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(first),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(last), [&](std::uint32_t a, std::uint32_t b) {
                       double ca = centroids_[a][axis], cb = centroids_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    std::uint32_t l = build(first, mid);
    std::uint32_t r = build(mid, last);
    nodes_[index].left = l;
    nodes_[index].right = r;
    return index;
  }

  const TriangleMesh* mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Aabb> boxes_;
  std::vector<Node> nodes_;
};

/// True when every undirected edge is shared by exactly two faces.
inline bool is_closed_manifold(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return false;
  std::vector<std::uint64_t> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      std::uint64_t a = f[k], b = f[(k + 1) % 3];
      if (a == b) return false;
      if (a > b) std::swap(a, b);
      edges.push_back((a << 32) | b);
    }
  }
  std::sort(edges.begin(), edges.end());
  std::size_t i = 0;
  while (i < edges.size()) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    if (j - i != 2) return false;
    i = j;
  }
  return true;
}

}  // namespace scenemotion::geometry
