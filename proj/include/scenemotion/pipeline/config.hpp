#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/io/json_io.hpp"
#include "scenemotion/planner/astar.hpp"
#include "scenemotion/scene/mesh.hpp"

namespace scenemotion {

inline constexpr const char* kVersion = "scenemotion 0.1.0";
inline constexpr const char* kBuiltinTestRoom = "builtin:test_room";
inline constexpr const char* kBuiltinTwoSeatRoom = "builtin:two_seat_room";

struct StageToggles {
  bool planner = true;
  bool trajectory = true;
  bool optimize = true;  // trajectory optimization
  bool metrics = true;
};

struct Checkpoints {
  std::optional<std::filesystem::path> pose;
  std::optional<std::filesystem::path> refiner;
  std::optional<std::filesystem::path> mapper;
};

/// Everything a run depends on. JSON keys match the field names; command-line
/// flags override values read from a file.
struct RunConfig {
  std::string scene = kBuiltinTestRoom;  // OBJ path or builtin:test_room / builtin:two_seat_room
  UpAxis up_axis = UpAxis::kZ;
  double cell_size = 0.1;
  std::vector<ActionLabel> actions{ActionLabel::kStand};
  std::uint64_t seed = 0;
  int samples = 1;  // independent samples of the whole action sequence
  FieldKind field = FieldKind::kStandard;
  Checkpoints checkpoints;
  std::filesystem::path out = "out";
  StageToggles stages;
  double max_segment_length = 3.0;
  int frames = 60;
  double jitter = 0.05;
  int clusters = 20;
  double contact_tolerance = 0.05;

  void validate() const {
    if (actions.empty()) throw Error(ErrorKind::kConfig, "actions: sequence is empty");
    if (samples < 1) throw Error(ErrorKind::kConfig, "samples: must be at least 1");
    if (!(cell_size > 0.0)) throw Error(ErrorKind::kConfig, "cell_size: must be positive");
    if (frames < 2) throw Error(ErrorKind::kConfig, "frames: must be at least 2");
    if (!(max_segment_length > 0.0)) throw Error(ErrorKind::kConfig, "max_segment_length: must be positive");
    if (jitter < 0.0) throw Error(ErrorKind::kConfig, "jitter: must be non-negative");
    if (clusters < 1) throw Error(ErrorKind::kConfig, "clusters: must be at least 1");
    if (field == FieldKind::kMapper && !checkpoints.mapper) {
      throw Error(ErrorKind::kConfig, "checkpoints.mapper: required when field is mapper");
    }
  }
};

inline std::string_view to_string(UpAxis a) { return a == UpAxis::kZ ? "z" : "y"; }

inline UpAxis up_axis_from_string(std::string_view s) {
  if (s == "z") return UpAxis::kZ;
  if (s == "y") return UpAxis::kY;
  throw Error(ErrorKind::kConfig, "unknown up axis '" + std::string(s) + "' (expected z or y)");
}

/// Comma-separated action names.
inline std::vector<ActionLabel> parse_actions(std::string_view list) {
  std::vector<ActionLabel> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    std::string_view tok = list.substr(start, end - start);
    if (!tok.empty()) out.push_back(action_from_string(tok));
    start = end + 1;
  }
  return out;
}

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json actions = json::array();
  for (ActionLabel a : c.actions) actions.push_back(std::string(to_string(a)));
  json ckpt = json::object();
  if (c.checkpoints.pose) ckpt["pose"] = c.checkpoints.pose->string();
  if (c.checkpoints.refiner) ckpt["refiner"] = c.checkpoints.refiner->string();
  if (c.checkpoints.mapper) ckpt["mapper"] = c.checkpoints.mapper->string();
  return {{"scene", c.scene},
          {"up_axis", std::string(to_string(c.up_axis))},
          {"cell_size", c.cell_size},
          {"actions", actions},
          {"seed", c.seed},
          {"samples", c.samples},
          {"field", std::string(to_string(c.field))},
          {"checkpoints", ckpt},
          {"out", c.out.string()},
          {"stages",
           {{"planner", c.stages.planner},
            {"trajectory", c.stages.trajectory},
            {"optimize", c.stages.optimize},
            {"metrics", c.stages.metrics}}},
          {"max_segment_length", c.max_segment_length},
          {"frames", c.frames},
          {"jitter", c.jitter},
          {"clusters", c.clusters},
          {"contact_tolerance", c.contact_tolerance}};
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw io::schema_error(path + "." + it.key(), "unknown key");
  }
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw io::schema_error(path, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw io::schema_error(path, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_unsigned() == false && j.get<long long>() < 0) throw io::schema_error(path, "expected a non-negative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw io::schema_error(path, "expected a number");
  } else {
    if (!j.is_string()) throw io::schema_error(path, "expected a string");
  }
  return j.get<T>();
}

}  // namespace detail

/// Reads the keys present in `j` over the defaults in `base`. Unknown keys are errors.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw io::schema_error("$", "expected an object");
  detail::reject_unknown(j,
                         {"scene", "up_axis", "cell_size", "actions", "seed", "samples", "field", "checkpoints", "out",
                          "stages", "max_segment_length", "frames", "jitter", "clusters", "contact_tolerance"},
                         "$");
  RunConfig c = std::move(base);
  auto wrap = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (std::string(e.what()).rfind("$.", 0) == 0) throw;
      throw io::schema_error(path, e.what());
    }
  };
  if (j.contains("scene")) c.scene = detail::get_as<std::string>(j["scene"], "$.scene");
  if (j.contains("up_axis")) {
    wrap("$.up_axis", [&] { c.up_axis = up_axis_from_string(detail::get_as<std::string>(j["up_axis"], "$.up_axis")); });
  }
  if (j.contains("cell_size")) c.cell_size = detail::get_as<double>(j["cell_size"], "$.cell_size");
  if (j.contains("actions")) {
    const auto& a = j["actions"];
    if (!a.is_array()) throw io::schema_error("$.actions", "expected an array of action names");
    c.actions.clear();
    for (std::size_t i = 0; i < a.size(); ++i) c.actions.push_back(io::action_from_json(a[i], "$.actions[" + std::to_string(i) + "]"));
  }
  if (j.contains("seed")) c.seed = detail::get_as<std::uint64_t>(j["seed"], "$.seed");
  if (j.contains("samples")) c.samples = detail::get_as<int>(j["samples"], "$.samples");
  if (j.contains("field")) {
    wrap("$.field", [&] { c.field = field_kind_from_string(detail::get_as<std::string>(j["field"], "$.field")); });
  }
  if (j.contains("checkpoints")) {
    const auto& k = j["checkpoints"];
    if (!k.is_object()) throw io::schema_error("$.checkpoints", "expected an object");
    detail::reject_unknown(k, {"pose", "refiner", "mapper"}, "$.checkpoints");
    if (k.contains("pose")) c.checkpoints.pose = detail::get_as<std::string>(k["pose"], "$.checkpoints.pose");
    if (k.contains("refiner")) c.checkpoints.refiner = detail::get_as<std::string>(k["refiner"], "$.checkpoints.refiner");
    if (k.contains("mapper")) c.checkpoints.mapper = detail::get_as<std::string>(k["mapper"], "$.checkpoints.mapper");
  }
  if (j.contains("out")) c.out = detail::get_as<std::string>(j["out"], "$.out");
  if (j.contains("stages")) {
    const auto& s = j["stages"];
    if (!s.is_object()) throw io::schema_error("$.stages", "expected an object");
    detail::reject_unknown(s, {"planner", "trajectory", "optimize", "metrics"}, "$.stages");
    if (s.contains("planner")) c.stages.planner = detail::get_as<bool>(s["planner"], "$.stages.planner");
    if (s.contains("trajectory")) c.stages.trajectory = detail::get_as<bool>(s["trajectory"], "$.stages.trajectory");
    if (s.contains("optimize")) c.stages.optimize = detail::get_as<bool>(s["optimize"], "$.stages.optimize");
    if (s.contains("metrics")) c.stages.metrics = detail::get_as<bool>(s["metrics"], "$.stages.metrics");
  }
  if (j.contains("max_segment_length")) c.max_segment_length = detail::get_as<double>(j["max_segment_length"], "$.max_segment_length");
  if (j.contains("frames")) c.frames = detail::get_as<int>(j["frames"], "$.frames");
  if (j.contains("jitter")) c.jitter = detail::get_as<double>(j["jitter"], "$.jitter");
  if (j.contains("clusters")) c.clusters = detail::get_as<int>(j["clusters"], "$.clusters");
  if (j.contains("contact_tolerance")) c.contact_tolerance = detail::get_as<double>(j["contact_tolerance"], "$.contact_tolerance");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& file) { return run_config_from_json(io::read_json(file)); }

}  // namespace scenemotion
