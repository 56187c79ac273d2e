#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/planner/astar.hpp"
#include "scenemotion/trajectory/trajectory.hpp"

namespace scenemotion::io {

using nlohmann::json;

/// Schema violation; the message starts with the offending field path.
inline Error schema_error(const std::string& path, const std::string& what) {
  return Error(ErrorKind::kConfig, path + ": " + what);
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw schema_error(path + "." + key, "missing");
  return *it;
}

inline std::vector<double> numbers(const json& j, std::size_t n, const std::string& path) {
  if (!j.is_array() || j.size() != n) throw schema_error(path, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw schema_error(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

inline json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const json& j, const std::string& path) {
  auto v = numbers(j, 3, path);
  return {v[0], v[1], v[2]};
}

inline Rot6 rot6_from_json(const json& j, const std::string& path) {
  auto v = numbers(j, 6, path);
  Rot6 r{};
  std::copy(v.begin(), v.end(), r.begin());
  if (!orthonormalizable(r)) throw schema_error(path, "rotation is not orthonormalizable");
  return r;
}

inline ActionLabel action_from_json(const json& j, const std::string& path) {
  if (!j.is_string()) throw schema_error(path, "expected an action name");
  try {
    return action_from_string(j.get<std::string>());
  } catch (const Error& e) {
    throw schema_error(path, e.what());
  }
}

inline json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, file.string() + ": " + e.what());
  }
}

/// Writes with a trailing newline; doubles keep round-trip precision.
inline void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write " + file.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kConfig, "failed writing " + file.string());
}

// Anchors: {"anchors": [{"action", "t": [3], "phi": [6], "theta": [32]?, "yaw_deg",
//                          "cell": [i, j, k]?, "scores": {affordance, penetration, diversity_penalty}?}]}

struct AnchorSet {
  std::vector<Anchor> anchors;
  bool has_theta = true;  // false if any entry omitted theta
};

/// Placement provenance written next to an anchor (the candidate it was drawn from).
struct AnchorProvenance {
  CellIndex cell;
  double affordance = 0.0;
  double penetration = 0.0;
  double diversity_penalty = 0.0;
};

inline json anchors_to_json(std::span<const Anchor> anchors, std::span<const AnchorProvenance> provenance = {}) {
  json arr = json::array();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Anchor& a = anchors[i];
    json r = {{"action", std::string(to_string(a.action))},
              {"t", to_json(a.t)},
              {"phi", json(std::vector<double>(a.phi.begin(), a.phi.end()))},
              {"theta", json(std::vector<double>(a.theta.begin(), a.theta.end()))},
              {"yaw_deg", yaw_of(a.phi) * 180.0 / std::numbers::pi}};
    if (i < provenance.size()) {
      const auto& p = provenance[i];
      r["cell"] = {p.cell.i, p.cell.j, p.cell.k};
      r["scores"] = {{"affordance", p.affordance}, {"penetration", p.penetration}, {"diversity_penalty", p.diversity_penalty}};
    }
    arr.push_back(std::move(r));
  }
  return {{"anchors", arr}};
}

inline AnchorSet anchors_from_json(const json& j) {
  const json& arr = field(j, "anchors", "$");
  if (!arr.is_array()) throw schema_error("$.anchors", "expected an array");
  AnchorSet out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = "$.anchors[" + std::to_string(i) + "]";
    Anchor a;
    a.action = action_from_json(field(arr[i], "action", p), p + ".action");
    a.t = vec3_from_json(field(arr[i], "t", p), p + ".t");
    a.phi = rot6_from_json(field(arr[i], "phi", p), p + ".phi");
    if (arr[i].contains("theta")) {
      auto th = numbers(arr[i]["theta"], kPoseDim, p + ".theta");
      std::copy(th.begin(), th.end(), a.theta.begin());
    } else {
      out.has_theta = false;
    }
    out.anchors.push_back(a);
  }
  return out;
}

// Paths: {"cell_size", "paths": [{"start": [i, j, k], "goal": [i, j, k], "field": {"kind", "seed"},
//                                 "cells": [[i, j, k]...], "points": [[x, y, z]...], "cost"}]}

struct PathRecord {
  std::vector<Cell2> cells;
  int layer = 0;
  std::vector<Vec3> points;  // cell centers at floor height, meters
  double cost = 0.0;
  FieldKind field = FieldKind::kStandard;
  std::uint64_t field_seed = 0;
};

struct PathSet {
  double cell_size = 0.0;
  std::vector<PathRecord> paths;
};

inline json paths_to_json(const PathSet& set) {
  json arr = json::array();
  for (const auto& p : set.paths) {
    json cells = json::array(), pts = json::array();
    for (const Cell2& c : p.cells) cells.push_back({c.i, c.j, p.layer});
    for (const Vec3& v : p.points) pts.push_back(to_json(v));
    json r = {{"field", {{"kind", std::string(to_string(p.field))}, {"seed", p.field_seed}}},
              {"cells", cells},
              {"points", pts},
              {"cost", p.cost}};
    if (!p.cells.empty()) {
      r["start"] = cells.front();
      r["goal"] = cells.back();
    }
    arr.push_back(std::move(r));
  }
  return {{"cell_size", set.cell_size}, {"paths", arr}};
}

inline PathSet paths_from_json(const json& j) {
  PathSet out;
  const json& cs = field(j, "cell_size", "$");
  if (!cs.is_number()) throw schema_error("$.cell_size", "expected a number");
  out.cell_size = cs.get<double>();
  const json& arr = field(j, "paths", "$");
  if (!arr.is_array()) throw schema_error("$.paths", "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = "$.paths[" + std::to_string(i) + "]";
    PathRecord r;
    const json& cells = field(arr[i], "cells", p);
    if (!cells.is_array()) throw schema_error(p + ".cells", "expected an array");
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string cp = p + ".cells[" + std::to_string(k) + "]";
      const json& c = cells[k];
      if (!c.is_array() || (c.size() != 2 && c.size() != 3)) throw schema_error(cp, "expected [i, j, k] integers");
      for (const auto& v : c) {
        if (!v.is_number_integer()) throw schema_error(cp, "expected [i, j, k] integers");
      }
      r.cells.push_back({c[0].get<int>(), c[1].get<int>()});
      if (c.size() == 3) r.layer = c[2].get<int>();
    }
    const json& pts = field(arr[i], "points", p);
    if (!pts.is_array()) throw schema_error(p + ".points", "expected an array");
    for (std::size_t k = 0; k < pts.size(); ++k) r.points.push_back(vec3_from_json(pts[k], p + ".points[" + std::to_string(k) + "]"));
    if (r.points.empty()) throw schema_error(p + ".points", "path has no points");
    const json& cost = field(arr[i], "cost", p);
    if (!cost.is_number()) throw schema_error(p + ".cost", "expected a number");
    r.cost = cost.get<double>();
    if (arr[i].contains("field")) {
      const json& f = arr[i]["field"];
      const json& kind = field(f, "kind", p + ".field");
      if (!kind.is_string()) throw schema_error(p + ".field.kind", "expected a string");
      try {
        r.field = field_kind_from_string(kind.get<std::string>());
      } catch (const Error& e) {
        throw schema_error(p + ".field.kind", e.what());
      }
      const json& seed = field(f, "seed", p + ".field");
      if (!seed.is_number_unsigned()) throw schema_error(p + ".field.seed", "expected a non-negative integer");
      r.field_seed = seed.get<std::uint64_t>();
    }
    out.paths.push_back(std::move(r));
  }
  return out;
}

// Trajectories: {"trajectories": [{"fps", "frames": [{"t": [3], "phi": [6], "action"}]}]}

inline json trajectory_to_json(const Trajectory& t) {
  json frames = json::array();
  for (const Frame& f : t.frames) {
    frames.push_back({{"t", to_json(f.t)},
                      {"phi", json(std::vector<double>(f.phi.begin(), f.phi.end()))},
                      {"action", std::string(to_string(f.action))}});
  }
  return {{"fps", 1.0 / t.frame_interval}, {"frames", frames}};
}

inline Trajectory trajectory_from_json(const json& j, const std::string& path = "$") {
  Trajectory t;
  const json& fps = field(j, "fps", path);
  if (!fps.is_number() || !(fps.get<double>() > 0.0)) throw schema_error(path + ".fps", "expected a positive number");
  t.frame_interval = 1.0 / fps.get<double>();
  const json& frames = field(j, "frames", path);
  if (!frames.is_array()) throw schema_error(path + ".frames", "expected an array");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string p = path + ".frames[" + std::to_string(k) + "]";
    Frame f;
    f.t = vec3_from_json(field(frames[k], "t", p), p + ".t");
    f.phi = rot6_from_json(field(frames[k], "phi", p), p + ".phi");
    f.action = action_from_json(field(frames[k], "action", p), p + ".action");
    t.frames.push_back(f);
  }
  return t;
}

inline json trajectories_to_json(std::span<const Trajectory> ts) {
  json arr = json::array();
  for (const auto& t : ts) arr.push_back(trajectory_to_json(t));
  return {{"trajectories", arr}};
}

inline std::vector<Trajectory> trajectories_from_json(const json& j) {
  const json& arr = field(j, "trajectories", "$");
  if (!arr.is_array()) throw schema_error("$.trajectories", "expected an array");
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(trajectory_from_json(arr[i], "$.trajectories[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace scenemotion::io
