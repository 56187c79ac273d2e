#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenemotion/anchors/pose.hpp"
#include "scenemotion/anchors/refiner.hpp"
#include "scenemotion/io/json_io.hpp"
#include "scenemotion/metrics/body_scores.hpp"
#include "scenemotion/metrics/cluster.hpp"
#include "scenemotion/metrics/distribution.hpp"
#include "scenemotion/metrics/path_deviation.hpp"
#include "scenemotion/nn/checkpoint.hpp"
#include "scenemotion/pipeline/config.hpp"
#include "scenemotion/pipeline/run.hpp"
#include "scenemotion/planner/mapper.hpp"

namespace scenemotion {

// ---- train ----

enum class TrainTarget { kPose, kRefiner, kMapper };

inline TrainTarget train_target_from_string(std::string_view s) {
  if (s == "pose") return TrainTarget::kPose;
  if (s == "refiner") return TrainTarget::kRefiner;
  if (s == "mapper") return TrainTarget::kMapper;
  throw Error(ErrorKind::kConfig, "unknown training target '" + std::string(s) + "' (expected pose, refiner or mapper)");
}

namespace detail {

inline void read_train_options(const nlohmann::json& j, nn::TrainOptions& t, const std::string& path) {
  if (!j.is_object()) throw io::schema_error(path, "expected an object");
  reject_unknown(j, {"epochs", "batch_size", "learning_rate", "kl_weight", "warmup_fraction"}, path);
  if (j.contains("epochs")) t.epochs = get_as<int>(j["epochs"], path + ".epochs");
  if (j.contains("batch_size")) t.batch_size = get_as<int>(j["batch_size"], path + ".batch_size");
  if (j.contains("learning_rate")) t.learning_rate = get_as<double>(j["learning_rate"], path + ".learning_rate");
  if (j.contains("kl_weight")) t.kl_weight = get_as<double>(j["kl_weight"], path + ".kl_weight");
  if (j.contains("warmup_fraction")) t.warmup_fraction = get_as<double>(j["warmup_fraction"], path + ".warmup_fraction");
}

}  // namespace detail

inline PoseTrainConfig pose_train_config(const nlohmann::json& j, std::uint64_t seed) {
  PoseTrainConfig c;
  if (!j.is_null()) {
    detail::reject_unknown(j, {"per_action", "mixture_seed", "mixture_stddev", "hidden", "latent_dim", "train"}, "$");
    if (j.contains("per_action")) c.per_action = detail::get_as<int>(j["per_action"], "$.per_action");
    if (j.contains("mixture_seed")) c.mixture_seed = detail::get_as<std::uint64_t>(j["mixture_seed"], "$.mixture_seed");
    if (j.contains("mixture_stddev")) c.mixture_stddev = detail::get_as<double>(j["mixture_stddev"], "$.mixture_stddev");
    if (j.contains("hidden")) c.hidden = detail::get_as<int>(j["hidden"], "$.hidden");
    if (j.contains("latent_dim")) c.latent_dim = detail::get_as<int>(j["latent_dim"], "$.latent_dim");
    if (j.contains("train")) detail::read_train_options(j["train"], c.train, "$.train");
  }
  c.train.seed = seed;
  return c;
}

inline RefinerTrainConfig refiner_train_config(const nlohmann::json& j, std::uint64_t seed) {
  RefinerTrainConfig c;
  if (!j.is_null()) {
    detail::reject_unknown(j, {"rooms", "per_room", "cell_size", "basis_seed", "basis_size", "mixture_seed", "hidden", "train"}, "$");
    if (j.contains("rooms")) c.rooms = detail::get_as<int>(j["rooms"], "$.rooms");
    if (j.contains("per_room")) c.per_room = detail::get_as<int>(j["per_room"], "$.per_room");
    if (j.contains("cell_size")) c.cell_size = detail::get_as<double>(j["cell_size"], "$.cell_size");
    if (j.contains("basis_seed")) c.basis_seed = detail::get_as<std::uint64_t>(j["basis_seed"], "$.basis_seed");
    if (j.contains("basis_size")) c.basis_size = detail::get_as<std::size_t>(j["basis_size"], "$.basis_size");
    if (j.contains("mixture_seed")) c.mixture_seed = detail::get_as<std::uint64_t>(j["mixture_seed"], "$.mixture_seed");
    if (j.contains("hidden")) c.hidden = detail::get_as<int>(j["hidden"], "$.hidden");
    if (j.contains("train")) detail::read_train_options(j["train"], c.train, "$.train");
  }
  c.train.seed = seed;
  return c;
}

inline MapperTrainConfig mapper_train_config(const nlohmann::json& j, std::uint64_t seed) {
  MapperTrainConfig c;
  if (!j.is_null()) {
    detail::reject_unknown(j, {"rooms", "paths_per_room", "cell_size", "window", "stride", "walk_speed", "fps", "jitter",
                               "basis_seed", "basis_size", "hidden", "train"},
                           "$");
    if (j.contains("rooms")) c.rooms = detail::get_as<int>(j["rooms"], "$.rooms");
    if (j.contains("paths_per_room")) c.paths_per_room = detail::get_as<int>(j["paths_per_room"], "$.paths_per_room");
    if (j.contains("cell_size")) c.cell_size = detail::get_as<double>(j["cell_size"], "$.cell_size");
    if (j.contains("window")) c.window = detail::get_as<int>(j["window"], "$.window");
    if (j.contains("stride")) c.stride = detail::get_as<int>(j["stride"], "$.stride");
    if (j.contains("walk_speed")) c.walk_speed = detail::get_as<double>(j["walk_speed"], "$.walk_speed");
    if (j.contains("fps")) c.fps = detail::get_as<double>(j["fps"], "$.fps");
    if (j.contains("jitter")) c.jitter = detail::get_as<double>(j["jitter"], "$.jitter");
    if (j.contains("basis_seed")) c.basis_seed = detail::get_as<std::uint64_t>(j["basis_seed"], "$.basis_seed");
    if (j.contains("basis_size")) c.basis_size = detail::get_as<std::size_t>(j["basis_size"], "$.basis_size");
    if (j.contains("hidden")) c.hidden = detail::get_as<int>(j["hidden"], "$.hidden");
    if (j.contains("train")) detail::read_train_options(j["train"], c.train, "$.train");
  }
  c.train.seed = seed;
  return c;
}

inline nlohmann::json trace_json(const std::vector<nn::EpochStats>& trace) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t e = 0; e < trace.size(); ++e) {
    arr.push_back({{"epoch", e + 1}, {"loss", trace[e].loss}, {"reconstruction", trace[e].reconstruction}, {"kl", trace[e].kl}});
  }
  return arr;
}

/// Trains on seeded synthetic data; writes the checkpoint and `<checkpoint>.trace.json`
/// unless another trace path is given. Returns the trained model.
inline nn::TrainResult cmd_train(TrainTarget what, const nlohmann::json& synth, std::uint64_t seed,
                                 const std::filesystem::path& checkpoint,
                                 std::optional<std::filesystem::path> trace_path = std::nullopt) {
  nn::TrainResult r;
  switch (what) {
    case TrainTarget::kPose: r = train_pose_model(pose_train_config(synth, seed)); break;
    case TrainTarget::kRefiner: r = train_place_refiner(refiner_train_config(synth, seed)); break;
    case TrainTarget::kMapper: r = train_mapper(mapper_train_config(synth, seed)); break;
  }
  nn::save_checkpoint(r.model, checkpoint);
  if (!trace_path) trace_path = std::filesystem::path(checkpoint.string() + ".trace.json");
  io::write_json(*trace_path, {{"kind", r.model.kind}, {"seed", seed}, {"epochs", trace_json(r.trace)}});
  return r;
}

// ---- eval ----

struct EvalRequest {
  std::optional<std::filesystem::path> anchors;
  std::optional<std::filesystem::path> paths;
  int reference_index = 0;  // reference path inside the paths file
  std::optional<std::filesystem::path> trajectories;
  std::optional<std::filesystem::path> reference_trajectories;  // for the Frechet distance
  std::optional<std::string> scene;                              // for non-collision / contact
  UpAxis up_axis = UpAxis::kZ;
  double cell_size = 0.1;
  int clusters = kDefaultClusterCount;
  std::uint64_t seed = 0;
  double contact_tolerance = kDefaultContactTolerance;
};

/// Metrics report over exported artifacts. Anchors missing theta are
/// clustered in position mode only.
inline nlohmann::json cmd_eval(const EvalRequest& req) {
  using nlohmann::json;
  json r;
  r["config"] = {{"k", req.clusters},
                 {"fractions", std::vector<double>(kDeviationFractions.begin(), kDeviationFractions.end())},
                 {"contact_tolerance", req.contact_tolerance},
                 {"seed", req.seed}};
  if (req.anchors) {
    io::AnchorSet set = io::anchors_from_json(io::read_json(*req.anchors));
    json a;
    a["count"] = set.anchors.size();
    a["mode"] = set.has_theta ? "full" : "position";
    if (set.has_theta) a["full"] = cluster_json(anchor_diversity(set.anchors, DiversityMode::kFull, req.clusters, req.seed));
    a["position"] = cluster_json(anchor_diversity(set.anchors, DiversityMode::kPosition, req.clusters, req.seed));
    r["anchors"] = a;
  }
  if (req.paths) {
    io::PathSet set = io::paths_from_json(io::read_json(*req.paths));
    if (req.reference_index < 0 || static_cast<std::size_t>(req.reference_index) >= set.paths.size()) {
      throw Error(ErrorKind::kConfig, "reference path index out of range");
    }
    std::vector<std::vector<Vec3>> pts;
    for (const auto& p : set.paths) pts.push_back(p.points);
    r["paths"] = deviation_json(path_deviation_std(pts, set.paths[static_cast<std::size_t>(req.reference_index)].points));
    r["paths"]["count"] = set.paths.size();
  }
  if (req.trajectories) {
    std::vector<Trajectory> ts = io::trajectories_from_json(io::read_json(*req.trajectories));
    json t;
    t["count"] = ts.size();
    bool equal_length = ts.size() >= 2;
    for (const auto& x : ts) equal_length = equal_length && x.frames.size() == ts.front().frames.size();
    if (equal_length) {
      std::vector<std::vector<double>> rows;
      for (const auto& x : ts) {
        std::vector<double> v;
        for (const Frame& f : x.frames) v.insert(v.end(), {f.t.x, f.t.y, f.t.z});
        rows.push_back(std::move(v));
      }
      t["apd"] = apd(rows);
    }
    if (req.reference_trajectories) {
      std::vector<Trajectory> ref = io::trajectories_from_json(io::read_json(*req.reference_trajectories));
      t["frechet"] = trajectory_frechet(ts, ref);
    }
    if (req.scene) {
      Scene scene = build_scene(load_scene_mesh(*req.scene, req.up_axis), req.cell_size);
      double nc = 0.0, ct = 0.0;
      for (const auto& x : ts) {
        std::vector<ProxyBody> bodies;
        for (const Frame& f : x.frames) bodies.push_back(proxy_body(PoseVector{}, f.action));
        nc += non_collision(x, bodies, scene.grid);
        ct += contact(x, bodies, scene.grid, req.contact_tolerance);
      }
      if (!ts.empty()) {
        t["non_collision"] = nc / static_cast<double>(ts.size());
        t["contact"] = ct / static_cast<double>(ts.size());
      }
    }
    r["trajectories"] = t;
  }
  return r;
}

// ---- export-obj ----

struct ObjExportOptions {
  bool bodies = false;  // capsule axes of the proxy body every `body_stride` frames
  int body_stride = 10;
};

/// Wavefront OBJ with the optional scene mesh (group "scene"), one polyline
/// per trajectory (groups "trajectory_<i>") and optional proxy-body capsule axes.
inline void export_obj(std::ostream& out, const std::vector<Trajectory>& trajs, const TriangleMesh* scene,
                       const ObjExportOptions& opt = {}) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  std::size_t base = 0;
  if (scene) {
    out << "g scene\n";
    write_obj(out, *scene);
    base = scene->vertices.size();
  }
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& fr = trajs[i].frames;
    out << "g trajectory_" << i << '\n';
    for (const Frame& f : fr) out << "v " << f.t.x << ' ' << f.t.y << ' ' << f.t.z << '\n';
    if (fr.size() >= 2) {
      out << 'l';
      for (std::size_t k = 0; k < fr.size(); ++k) out << ' ' << base + k + 1;
      out << '\n';
    }
    base += fr.size();
    if (!opt.bodies) continue;
    out << "g bodies_" << i << '\n';
    for (std::size_t k = 0; k < fr.size(); k += static_cast<std::size_t>(std::max(1, opt.body_stride))) {
      const Mat3 r = rotation_from_6d(fr[k].phi);
      for (const Capsule& c : proxy_body(PoseVector{}, fr[k].action).capsules) {
        Vec3 a = to_world(r, fr[k].t, c.a), b = to_world(r, fr[k].t, c.b);
        out << "v " << a.x << ' ' << a.y << ' ' << a.z << '\n' << "v " << b.x << ' ' << b.y << ' ' << b.z << '\n';
        out << "l " << base + 1 << ' ' << base + 2 << '\n';
        base += 2;
      }
    }
  }
}

}  // namespace scenemotion
