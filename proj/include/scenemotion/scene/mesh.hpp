#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/vec3.hpp"

namespace scenemotion {

using Face = std::array<std::uint32_t, 3>;

/// Triangle soup with shared vertices. Coordinates in meters, z-up.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  Aabb bounds() const {
    if (vertices.empty()) return {};
    Aabb box{vertices.front(), vertices.front()};
    for (const Vec3& v : vertices) box.expand(v);
    return box;
  }

  /// Throws if any face index is out of range or any coordinate is non-finite.
  void validate() const {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (!is_finite(vertices[i])) {
        throw Error(ErrorKind::kScene, "vertex " + std::to_string(i) + " has a non-finite coordinate");
      }
    }
    for (std::size_t f = 0; f < faces.size(); ++f) {
      for (std::uint32_t idx : faces[f]) {
        if (idx >= vertices.size()) {
          throw Error(ErrorKind::kScene, "face " + std::to_string(f) + " references vertex " +
                                             std::to_string(idx) + " of " + std::to_string(vertices.size()));
        }
      }
    }
  }

  /// Appends `other`, offsetting its indices.
  void append(const TriangleMesh& other) {
    auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (Face f : other.faces) faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
};

enum class UpAxis { kZ, kY };

struct ObjStats {
  std::size_t vertex_lines = 0;
  std::size_t face_lines = 0;
  std::size_t ignored_lines = 0;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view tok, double& out) {
  // from_chars for double is available in libstdc++ 11.
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline bool parse_index(std::string_view tok, long long& out) {
  std::string_view head = tok.substr(0, tok.find('/'));
  if (head.empty()) return false;
  auto res = std::from_chars(head.data(), head.data() + head.size(), out);
  return res.ec == std::errc() && res.ptr == head.data() + head.size();
}

}  // namespace detail

/// Parses the OBJ subset: `v x y z` and `f i j k [l ...]` (1-based, `i/t/n`
/// forms accepted, polygons fan-triangulated). Comments and blank lines are
/// skipped; any other record is counted in `stats->ignored_lines`.
inline TriangleMesh parse_obj(std::istream& in, UpAxis up = UpAxis::kZ, ObjStats* stats = nullptr) {
  TriangleMesh mesh;
  ObjStats local;
  struct PendingFace {
    std::vector<long long> idx;
    std::size_t line;
  };
  std::vector<PendingFace> pending;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw ParseError(lineno, "vertex needs three coordinates");
      double c[3];
      for (int a = 0; a < 3; ++a) {
        if (!detail::parse_double(toks[1 + a], c[a]) || !std::isfinite(c[a])) {
          throw ParseError(lineno, "bad vertex coordinate '" + std::string(toks[1 + a]) + "'");
        }
      }
      Vec3 v = up == UpAxis::kZ ? Vec3{c[0], c[1], c[2]} : Vec3{c[0], -c[2], c[1]};
      mesh.vertices.push_back(v);
      ++local.vertex_lines;
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw ParseError(lineno, "face needs at least three indices");
      PendingFace pf{{}, lineno};
      for (std::size_t t = 1; t < toks.size(); ++t) {
        long long idx = 0;
        if (!detail::parse_index(toks[t], idx)) {
          throw ParseError(lineno, "bad face index '" + std::string(toks[t]) + "'");
        }
        pf.idx.push_back(idx);
      }
      pending.push_back(std::move(pf));
      ++local.face_lines;
    } else {
      ++local.ignored_lines;
    }
  }

  // Indices are resolved after reading so that faces may precede their vertices.
  const auto nverts = static_cast<long long>(mesh.vertices.size());
  for (const PendingFace& pf : pending) {
    std::vector<std::uint32_t> zero_based;
    for (long long idx : pf.idx) {
      if (idx < 1 || idx > nverts) {
        throw ParseError(pf.line, "face index " + std::to_string(idx) + " out of range (1.." +
                                      std::to_string(nverts) + ")");
      }
      zero_based.push_back(static_cast<std::uint32_t>(idx - 1));
    }
    for (std::size_t k = 1; k + 1 < zero_based.size(); ++k) {
      mesh.faces.push_back({zero_based[0], zero_based[k], zero_based[k + 1]});
    }
  }
  if (stats) *stats = local;
  return mesh;
}

inline TriangleMesh load_mesh(const std::filesystem::path& path, UpAxis up = UpAxis::kZ,
                              ObjStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kScene, "cannot open mesh file " + path.string());
  return parse_obj(in, up, stats);
}

/// Writes `v`/`f` records (z-up, 1-based) with round-trip precision.
inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const Face& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace scenemotion
