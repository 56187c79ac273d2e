#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenemotion/anchors/placement.hpp"
#include "scenemotion/anchors/pose.hpp"
#include "scenemotion/anchors/refiner.hpp"
#include "scenemotion/io/json_io.hpp"
#include "scenemotion/metrics/body_scores.hpp"
#include "scenemotion/metrics/cluster.hpp"
#include "scenemotion/metrics/distribution.hpp"
#include "scenemotion/metrics/path_deviation.hpp"
#include "scenemotion/nn/checkpoint.hpp"
#include "scenemotion/pipeline/config.hpp"
#include "scenemotion/planner/astar.hpp"
#include "scenemotion/planner/mapper.hpp"
#include "scenemotion/planner/walkable.hpp"
#include "scenemotion/scene/fixtures.hpp"
#include "scenemotion/scene/scene.hpp"
#include "scenemotion/trajectory/optimize.hpp"
#include "scenemotion/trajectory/trajectory.hpp"

namespace scenemotion {

// Stage ids for seed derivation: mix_seed(master, stage, sample).
inline constexpr std::uint64_t kStageAnchors = 1;
inline constexpr std::uint64_t kStagePlanner = 2;
inline constexpr std::uint64_t kStageTrajectory = 3;
inline constexpr std::uint64_t kStageMetrics = 4;

/// Failure inside a pipeline stage; keeps the original kind (and exit code).
class StageError : public Error {
 public:
  StageError(ErrorKind kind, std::string stage, int sample, const std::string& what)
      : Error(kind, "stage " + stage + (sample >= 0 ? ", sample " + std::to_string(sample) : std::string()) + ": " + what),
        stage_(std::move(stage)),
        sample_(sample) {}
  const std::string& stage() const noexcept { return stage_; }
  int sample() const noexcept { return sample_; }

 private:
  std::string stage_;
  int sample_;
};

template <class Fn>
auto in_stage(const std::string& stage, int sample, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e.kind(), stage, sample, e.what());
  }
}

struct RunManifest {
  nlohmann::json config;
  nlohmann::json seeds;
  std::vector<std::string> artifacts;  // file names inside the output directory
  nlohmann::json timings;              // seconds per stage
  std::string version = kVersion;

  nlohmann::json to_json() const {
    return {{"version", version}, {"config", config}, {"seeds", seeds}, {"artifacts", artifacts}, {"timings", timings}};
  }
};

inline TriangleMesh load_scene_mesh(const std::string& scene, UpAxis up) {
  if (scene == kBuiltinTestRoom) return fixtures::make_test_room();
  if (scene == kBuiltinTwoSeatRoom) return fixtures::make_two_seat_room();
  return load_mesh(scene, up);
}

/// Models the run needs, loaded from the configured checkpoints.
struct LoadedModels {
  PoseSampler poses;
  std::optional<nn::CvaeModel> refiner;
  std::optional<BasisSet> refiner_basis;
  std::optional<nn::CvaeModel> mapper;
  std::optional<BasisSet> mapper_basis;
};

inline LoadedModels load_models(const RunConfig& cfg) {
  LoadedModels m;
  if (cfg.checkpoints.pose) {
    m.poses.model = nn::load_checkpoint(*cfg.checkpoints.pose);
    require_pose_model(*m.poses.model);
  }
  auto with_basis = [](const nn::CvaeModel& model, const char* what) {
    if (!model.basis_seed) throw Error(ErrorKind::kConfig, std::string(what) + " checkpoint has no basis-point seed");
    return make_basis(model.basis_size, *model.basis_seed);
  };
  if (cfg.checkpoints.refiner) {
    m.refiner = nn::load_checkpoint(*cfg.checkpoints.refiner);
    m.refiner_basis = with_basis(*m.refiner, "refiner");
    require_refiner_model(*m.refiner, *m.refiner_basis);
  }
  if (cfg.field == FieldKind::kMapper) {
    m.mapper = nn::load_checkpoint(*cfg.checkpoints.mapper);
    m.mapper_basis = with_basis(*m.mapper, "mapper");
    require_mapper_model(*m.mapper, *m.mapper_basis);
  }
  return m;
}

struct PlacedSequence {
  std::vector<Anchor> anchors;
  std::vector<io::AnchorProvenance> provenance;  // the candidate each anchor was drawn from
};

/// Places the anchors of one sample of the action sequence: pose, placement
/// (with the diversity penalty over this sample's earlier anchors), optional
/// learned refinement, then local optimization.
inline PlacedSequence place_sequence(const RunConfig& cfg, const Scene& scene, const LoadedModels& models,
                                     std::uint64_t sample_seed) {
  PlacedSequence out;
  std::vector<Anchor>& placed = out.anchors;
  PlacementOptions popt;
  popt.weights.contact_tolerance = cfg.contact_tolerance;
  for (std::size_t i = 0; i < cfg.actions.size(); ++i) {
    const ActionLabel action = cfg.actions[i];
    PoseVector theta = models.poses.sample(action, mix_seed(sample_seed, i, 0));
    PlacementResult pr = place_anchor(theta, action, scene.grid, placed, mix_seed(sample_seed, i, 1), popt);
    out.provenance.push_back({pr.chosen.cell, pr.chosen.affordance, pr.chosen.penetration, pr.chosen.diversity_penalty});
    Anchor a = pr.anchor;
    if (models.refiner) {
      a = refine_placement(*models.refiner, a, scene.mesh.vertices, *models.refiner_basis, scene.grid.cell_size,
                           mix_seed(sample_seed, i, 2))
              .anchor;
    }
    AnchorOptimizeOptions aopt;
    aopt.weights = popt.weights;
    a = optimize_anchor(a, scene.grid, aopt).anchor;
    placed.push_back(a);
  }
  return out;
}

/// Cost field of the configured kind for one planning episode.
struct FieldSource {
  FieldKind kind = FieldKind::kStandard;
  const WalkableMap* map = nullptr;
  const LoadedModels* models = nullptr;
  std::optional<MapperContext> context;

  CostField make(std::uint64_t seed) const {
    switch (kind) {
      case FieldKind::kStandard: return field_standard(*map);
      case FieldKind::kRandom: return field_random(*map, seed);
      case FieldKind::kShared: return field_shared(*map, seed);
      case FieldKind::kMapper: return field_mapper(*models->mapper, *context, *models->mapper_basis, seed);
    }
    return field_standard(*map);
  }
};

inline FieldSource make_field_source(FieldKind kind, const WalkableMap& map, const Scene& scene, const LoadedModels& models) {
  FieldSource f{kind, &map, &models, std::nullopt};
  if (kind == FieldKind::kMapper) f.context = make_mapper_context(*models.mapper, map, scene.mesh.vertices, *models.mapper_basis);
  return f;
}

struct SequenceTrajectory {
  Trajectory trajectory;
  std::vector<ProxyBody> bodies;  // one per frame
};

/// Splits, refines, optionally optimizes and stitches the path between two anchors.
inline SequenceTrajectory build_trajectory(const RunConfig& cfg, const Scene& scene, const WalkableMap& map,
                                           const GridPath& path, const Anchor& from, const Anchor& to,
                                           const PoseSampler& poses, std::uint64_t seed) {
  auto segments = split_path(map, path, from, to, cfg.max_segment_length, poses, mix_seed(seed, 0, 0));
  std::vector<Trajectory> parts;
  SequenceTrajectory out;
  RefineOptions ropt;
  ropt.frames = cfg.frames;
  ropt.jitter = cfg.jitter;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    Trajectory t = refine_path(segments[k], map, scene.grid, mix_seed(seed, 1, k), ropt);
    if (cfg.stages.optimize) t = optimize_trajectory(t, scene.grid).trajectory;
    for (std::size_t f = (k == 0 ? 0 : 1); f < t.frames.size(); ++f) {
      const PoseVector& theta = f + 1 == t.frames.size() ? segments[k].end.theta : segments[k].start.theta;
      out.bodies.push_back(proxy_body(theta, t.frames[f].action));
    }
    parts.push_back(std::move(t));
  }
  out.trajectory = stitch(parts);
  return out;
}

inline nlohmann::json cluster_json(const ClusterReport& r) {
  return {{"k", r.k}, {"entropy", r.entropy}, {"mean_distance", r.mean_distance}, {"sizes", r.sizes}, {"iterations", r.iterations}};
}

inline nlohmann::json deviation_json(const PathDeviationReport& r) {
  return {{"fractions", std::vector<double>(kDeviationFractions.begin(), kDeviationFractions.end())},
          {"std", std::vector<double>(r.std.begin(), r.std.end())}};
}

/// Paths between one fixed start/goal pair: the standard A* reference and
/// `count` samples from `fields` with seeds mix_seed(seed, 0, i).
struct FixedPairPaths {
  GridPath reference;
  std::vector<GridPath> samples;
};

inline FixedPairPaths plan_fixed_pair(const WalkableMap& map, const Cell2& a, const Cell2& b, const FieldSource& fields,
                                      int count, std::uint64_t seed) {
  FixedPairPaths out;
  out.reference = astar(map, a, b, field_standard(map));
  for (int i = 0; i < count; ++i) out.samples.push_back(astar(map, a, b, fields.make(mix_seed(seed, 0, static_cast<std::uint64_t>(i)))));
  return out;
}

namespace detail {

/// Tracks files written by a run and deletes them unless committed.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!std::filesystem::exists(dir_)) {
      std::filesystem::create_directories(dir_, ec);
      if (ec) throw Error(ErrorKind::kConfig, "cannot create output directory " + dir_.string());
      created_dir_ = true;
    }
  }
  ~ArtifactWriter() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : written_) std::filesystem::remove(dir_ / f, ec);
    if (created_dir_ && std::filesystem::is_empty(dir_, ec)) std::filesystem::remove(dir_, ec);
  }
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;

  void write(const std::string& name, const nlohmann::json& j) {
    written_.push_back(name);
    io::write_json(dir_ / name, j);
  }
  const std::vector<std::string>& written() const { return written_; }
  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
  bool created_dir_ = false;
  bool committed_ = false;
};

inline std::vector<double> anchor_vector(const Anchor& a) {
  std::vector<double> v{a.t.x, a.t.y, a.t.z};
  v.insert(v.end(), a.phi.begin(), a.phi.end());
  v.insert(v.end(), a.theta.begin(), a.theta.end());
  return v;
}

}  // namespace detail

/// anchors -> planner -> trajectory -> metrics. Writes anchors.json,
/// paths.json, trajectories.json (when the stages run and the sequence has at
/// least two actions), metrics.json and manifest.json into cfg.out. On error
/// every file written by this call is removed.
inline RunManifest run_pipeline(const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  using nlohmann::json;
  cfg.validate();
  RunManifest manifest;
  manifest.config = to_json(cfg);
  auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };

  auto t0 = clock::now();
  const Scene scene = in_stage("scene", -1, [&] { return build_scene(load_scene_mesh(cfg.scene, cfg.up_axis), cfg.cell_size); });
  const LoadedModels models = in_stage("models", -1, [&] { return load_models(cfg); });
  manifest.timings["scene"] = seconds(t0);

  detail::ArtifactWriter out(cfg.out);
  const std::size_t n_actions = cfg.actions.size();
  const std::size_t n_pairs = n_actions - 1;
  const auto samples = static_cast<std::size_t>(cfg.samples);

  // Anchors.
  t0 = clock::now();
  std::vector<std::vector<Anchor>> anchors(samples);
  std::vector<io::AnchorProvenance> provenance;
  json anchor_seeds = json::array();
  for (std::size_t s = 0; s < samples; ++s) {
    const std::uint64_t seed = mix_seed(cfg.seed, kStageAnchors, s);
    anchor_seeds.push_back(seed);
    PlacedSequence ps = in_stage("anchors", static_cast<int>(s), [&] { return place_sequence(cfg, scene, models, seed); });
    anchors[s] = std::move(ps.anchors);
    provenance.insert(provenance.end(), ps.provenance.begin(), ps.provenance.end());
  }
  manifest.seeds["anchors"] = anchor_seeds;
  {
    std::vector<Anchor> flat;
    for (const auto& seq : anchors) flat.insert(flat.end(), seq.begin(), seq.end());
    json j = io::anchors_to_json(flat, provenance);
    j["samples"] = cfg.samples;
    j["actions_per_sample"] = n_actions;
    out.write("anchors.json", j);
  }
  manifest.timings["anchors"] = seconds(t0);

  // Planner.
  std::optional<WalkableMap> map;
  std::optional<FieldSource> fields;
  std::vector<std::vector<GridPath>> paths(samples);
  const bool plan = cfg.stages.planner && n_pairs > 0;
  if (plan) {
    t0 = clock::now();
    map = in_stage("planner", -1, [&] { return build_walkable(scene.grid); });
    fields = in_stage("planner", -1, [&] { return make_field_source(cfg.field, *map, scene, models); });
    json seeds = json::array();
    io::PathSet set{cfg.cell_size, {}};
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t p = 0; p < n_pairs; ++p) {
        const std::uint64_t seed = mix_seed(cfg.seed, kStagePlanner, s * n_pairs + p);
        seeds.push_back(seed);
        GridPath path = in_stage("planner", static_cast<int>(s), [&] {
          Cell2 a = nearest_walkable(*map, anchors[s][p].t), b = nearest_walkable(*map, anchors[s][p + 1].t);
          return astar(*map, a, b, fields->make(seed));
        });
        set.paths.push_back({path.cells, map->layer, path_points(*map, path), path.cost, cfg.field,
                             cfg.field == FieldKind::kStandard ? 0 : seed});
        paths[s].push_back(std::move(path));
      }
    }
    manifest.seeds["planner"] = seeds;
    out.write("paths.json", io::paths_to_json(set));
    manifest.timings["planner"] = seconds(t0);
  }

  // Trajectories.
  std::vector<SequenceTrajectory> trajectories;
  if (plan && cfg.stages.trajectory) {
    t0 = clock::now();
    json seeds = json::array();
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t p = 0; p < n_pairs; ++p) {
        const std::uint64_t seed = mix_seed(cfg.seed, kStageTrajectory, s * n_pairs + p);
        seeds.push_back(seed);
        trajectories.push_back(in_stage("trajectory", static_cast<int>(s), [&] {
          return build_trajectory(cfg, scene, *map, paths[s][p], anchors[s][p], anchors[s][p + 1], models.poses, seed);
        }));
      }
    }
    manifest.seeds["trajectory"] = seeds;
    std::vector<Trajectory> ts;
    for (const auto& t : trajectories) ts.push_back(t.trajectory);
    out.write("trajectories.json", io::trajectories_to_json(ts));
    manifest.timings["trajectory"] = seconds(t0);
  }

  // Metrics.
  if (cfg.stages.metrics) {
    t0 = clock::now();
    const std::uint64_t seed = mix_seed(cfg.seed, kStageMetrics, 0);
    manifest.seeds["metrics"] = seed;
    json m = in_stage("metrics", -1, [&] {
      json r;
      r["config"] = {{"k", cfg.clusters},
                     {"fractions", std::vector<double>(kDeviationFractions.begin(), kDeviationFractions.end())},
                     {"contact_tolerance", cfg.contact_tolerance},
                     {"field", std::string(to_string(cfg.field))}};
      std::vector<Anchor> flat;
      for (const auto& seq : anchors) flat.insert(flat.end(), seq.begin(), seq.end());
      r["anchor_count"] = flat.size();
      if (flat.size() >= static_cast<std::size_t>(cfg.clusters)) {
        r["anchor_diversity_full"] = cluster_json(anchor_diversity(flat, DiversityMode::kFull, cfg.clusters, seed));
        r["anchor_diversity_position"] = cluster_json(anchor_diversity(flat, DiversityMode::kPosition, cfg.clusters, seed));
      } else {
        r["anchor_diversity_skipped"] = "fewer points than K";
      }
      if (samples >= 2) {
        json apds = json::array();
        for (std::size_t i = 0; i < n_actions; ++i) {
          std::vector<std::vector<double>> rows;
          for (const auto& seq : anchors) rows.push_back(detail::anchor_vector(seq[i]));
          apds.push_back(apd(rows));
        }
        r["anchor_apd"] = apds;
      }
      if (plan && samples >= 2) {
        // Path spread between the first anchor pair of sample 0, over `samples` fields.
        Cell2 a = nearest_walkable(*map, anchors[0][0].t), b = nearest_walkable(*map, anchors[0][1].t);
        FixedPairPaths fp = plan_fixed_pair(*map, a, b, *fields, cfg.samples, mix_seed(seed, 1, 0));
        r["path_deviation_std"] = deviation_json(path_deviation_std(*map, fp.samples, fp.reference));
      }
      if (!trajectories.empty()) {
        double nc = 0.0, ct = 0.0;
        for (const auto& t : trajectories) {
          nc += non_collision(t.trajectory, t.bodies, scene.grid);
          ct += contact(t.trajectory, t.bodies, scene.grid, cfg.contact_tolerance);
        }
        r["trajectory_count"] = trajectories.size();
        r["non_collision"] = nc / static_cast<double>(trajectories.size());
        r["contact"] = ct / static_cast<double>(trajectories.size());
      }
      return r;
    });
    out.write("metrics.json", m);
    manifest.timings["metrics"] = seconds(t0);
  }

  manifest.artifacts = out.written();
  json mj = manifest.to_json();
  out.write("manifest.json", mj);
  out.commit();
  return manifest;
}

}  // namespace scenemotion
