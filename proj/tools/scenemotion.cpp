// scenemotion: anchors -> paths -> trajectories on a voxelized scene.
//
//   scenemotion run --scene room.obj --actions sit,stand --samples 10 --field mapper --mapper mapper.json
//   scenemotion train pose --seed 1 --out pose.json
//   scenemotion eval --anchors out/anchors.json --paths out/paths.json
//   scenemotion export-obj --trajectories out/trajectories.json --scene room.obj --out traj.obj
//
// Exit codes: 0 ok, 2 config, 3 scene, 4 planning, 5 training.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "scenemotion/pipeline/commands.hpp"
#include "scenemotion/pipeline/run.hpp"

namespace {

using namespace scenemotion;

struct RunFlags {
  std::string config;
  std::optional<std::string> scene, actions, field, out, up_axis, pose, refiner, mapper;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<double> cell_size;
  bool no_planner = false, no_trajectory = false, no_optimize = false, no_metrics = false;
};

RunConfig resolve(const RunFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.scene) c.scene = *f.scene;
  if (f.actions) c.actions = parse_actions(*f.actions);
  if (f.field) c.field = field_kind_from_string(*f.field);
  if (f.out) c.out = *f.out;
  if (f.up_axis) c.up_axis = up_axis_from_string(*f.up_axis);
  if (f.pose) c.checkpoints.pose = *f.pose;
  if (f.refiner) c.checkpoints.refiner = *f.refiner;
  if (f.mapper) c.checkpoints.mapper = *f.mapper;
  if (f.seed) c.seed = *f.seed;
  if (f.samples) c.samples = *f.samples;
  if (f.cell_size) c.cell_size = *f.cell_size;
  if (f.no_planner) c.stages.planner = false;
  if (f.no_trajectory) c.stages.trajectory = false;
  if (f.no_optimize) c.stages.optimize = false;
  if (f.no_metrics) c.stages.metrics = false;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-aware motion synthesis: anchors, diverse paths, trajectories and metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  run->add_option("--config", rf.config, "JSON run config (flags override it)");
  run->add_option("--scene", rf.scene, "OBJ file or builtin:test_room / builtin:two_seat_room");
  run->add_option("--actions", rf.actions, "Comma-separated actions: sit, lie, stand, walk, squat");
  run->add_option("--seed", rf.seed, "Master seed");
  run->add_option("--samples", rf.samples, "Samples of the action sequence");
  run->add_option("--cell-size", rf.cell_size, "Voxel size in meters");
  run->add_option("--field", rf.field, "Cost field: standard, random, shared, mapper");
  run->add_option("--out", rf.out, "Output directory");
  run->add_option("--up-axis", rf.up_axis, "Up axis of the OBJ file: z or y");
  run->add_option("--pose", rf.pose, "Pose model checkpoint");
  run->add_option("--refiner", rf.refiner, "Place-refiner checkpoint");
  run->add_option("--mapper", rf.mapper, "Mapper checkpoint (required for --field mapper)");
  run->add_flag("--no-planner", rf.no_planner, "Skip path planning");
  run->add_flag("--no-trajectory", rf.no_trajectory, "Skip trajectory synthesis");
  run->add_flag("--no-optimize", rf.no_optimize, "Skip trajectory optimization");
  run->add_flag("--no-metrics", rf.no_metrics, "Skip metrics");

  std::string train_what, train_synth, train_out, train_trace;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Train a model on seeded synthetic data");
  train->add_option("what", train_what, "pose, refiner or mapper")->required();
  train->add_option("--synth", train_synth, "JSON synthetic-data / training config");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--out", train_out, "Checkpoint file")->required();
  train->add_option("--trace", train_trace, "Loss trace file (default <out>.trace.json)");

  EvalRequest er;
  std::string eval_out, e_anchors, e_paths, e_traj, e_ref, e_scene, e_up = "z";
  auto* eval = app.add_subcommand("eval", "Compute metrics over exported artifacts");
  eval->add_option("--anchors", e_anchors, "anchors.json");
  eval->add_option("--paths", e_paths, "paths.json");
  eval->add_option("--reference-index", er.reference_index, "Reference path index in the paths file");
  eval->add_option("--trajectories", e_traj, "trajectories.json");
  eval->add_option("--reference-trajectories", e_ref, "Reference trajectories for the Frechet distance");
  eval->add_option("--scene", e_scene, "Scene for non-collision and contact scores");
  eval->add_option("--up-axis", e_up, "Up axis of the OBJ file: z or y");
  eval->add_option("--cell-size", er.cell_size, "Voxel size in meters");
  eval->add_option("--clusters", er.clusters, "K for k-means");
  eval->add_option("--seed", er.seed, "k-means seed");
  eval->add_option("--tau", er.contact_tolerance, "Contact tolerance in meters");
  eval->add_option("--out", eval_out, "Report file (default stdout)");

  std::string x_traj, x_scene, x_out, x_up = "z";
  ObjExportOptions xo;
  auto* xobj = app.add_subcommand("export-obj", "Write trajectories (and the scene) as OBJ for inspection");
  xobj->add_option("--trajectories", x_traj, "trajectories.json")->required();
  xobj->add_option("--scene", x_scene, "Scene to include");
  xobj->add_option("--up-axis", x_up, "Up axis of the scene OBJ: z or y");
  xobj->add_flag("--bodies", xo.bodies, "Add proxy-body capsule axes");
  xobj->add_option("--body-stride", xo.body_stride, "Frames between drawn bodies");
  xobj->add_option("--out", x_out, "OBJ file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      RunManifest m = run_pipeline(resolve(rf));
      for (const auto& a : m.artifacts) std::cout << a << '\n';
    } else if (*train) {
      nlohmann::json synth = train_synth.empty() ? nlohmann::json() : io::read_json(train_synth);
      std::optional<std::filesystem::path> trace;
      if (!train_trace.empty()) trace = train_trace;
      auto r = cmd_train(train_target_from_string(train_what), synth, train_seed, train_out, trace);
      std::cout << "final loss " << r.trace.back().loss << '\n';
    } else if (*eval) {
      if (!e_anchors.empty()) er.anchors = e_anchors;
      if (!e_paths.empty()) er.paths = e_paths;
      if (!e_traj.empty()) er.trajectories = e_traj;
      if (!e_ref.empty()) er.reference_trajectories = e_ref;
      if (!e_scene.empty()) er.scene = e_scene;
      er.up_axis = up_axis_from_string(e_up);
      nlohmann::json report = cmd_eval(er);
      if (eval_out.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        io::write_json(eval_out, report);
      }
    } else if (*xobj) {
      auto trajs = io::trajectories_from_json(io::read_json(x_traj));
      std::optional<TriangleMesh> mesh;
      if (!x_scene.empty()) mesh = load_scene_mesh(x_scene, up_axis_from_string(x_up));
      std::ofstream out(x_out);
      if (!out) throw Error(ErrorKind::kConfig, "cannot write " + x_out);
      export_obj(out, trajs, mesh ? &*mesh : nullptr, xo);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
