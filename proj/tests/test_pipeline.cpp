#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scenemotion/pipeline/commands.hpp"
#include "scenemotion/pipeline/run.hpp"

using namespace scenemotion;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("scenemotion_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_run(const fs::path& out) {
  RunConfig c;
  c.actions = {ActionLabel::kStand, ActionLabel::kSit};
  c.samples = 1;
  c.frames = 20;
  c.out = out;
  return c;
}

}  // namespace

TEST(Pipeline, SmokeRunWritesArtifacts) {
  fs::path out = scratch("smoke");
  RunManifest m = run_pipeline(small_run(out));
  for (const char* f : {"anchors.json", "paths.json", "trajectories.json", "metrics.json"}) {
    EXPECT_NE(std::find(m.artifacts.begin(), m.artifacts.end(), f), m.artifacts.end()) << f;
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  auto anchors = io::anchors_from_json(io::read_json(out / "anchors.json"));
  ASSERT_EQ(anchors.anchors.size(), 2u);
  EXPECT_EQ(anchors.anchors[0].action, ActionLabel::kStand);
  EXPECT_EQ(anchors.anchors[1].action, ActionLabel::kSit);
  auto metrics = io::read_json(out / "metrics.json");
  EXPECT_EQ(metrics["anchor_diversity_skipped"], "fewer points than K");
  EXPECT_GE(metrics["non_collision"].get<double>(), 0.0);
  EXPECT_LE(metrics["non_collision"].get<double>(), 1.0);
  fs::remove_all(out);
}

TEST(Pipeline, SameConfigSameBytes) {
  fs::path a = scratch("det_a"), b = scratch("det_b");
  RunConfig ca = small_run(a), cb = small_run(b);
  run_pipeline(ca);
  run_pipeline(cb);
  for (const char* f : {"anchors.json", "paths.json", "trajectories.json", "metrics.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, StageTogglesLimitArtifacts) {
  fs::path out = scratch("toggles");
  RunConfig c = small_run(out);
  c.stages.trajectory = false;
  c.stages.metrics = false;
  RunManifest m = run_pipeline(c);
  EXPECT_EQ(m.artifacts, (std::vector<std::string>{"anchors.json", "paths.json"}));
  EXPECT_FALSE(fs::exists(out / "trajectories.json"));
  fs::remove_all(out);
}

TEST(Pipeline, StageErrorKeepsKindAndNamesStage) {
  try {
    in_stage("planner", 0, []() -> int { throw NoPathError("goal cut off"); });
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPlanning);
    EXPECT_EQ(e.stage(), "planner");
    EXPECT_NE(std::string(e.what()).find("stage planner, sample 0: no path"), std::string::npos);
    EXPECT_EQ(exit_code_for(e.kind()), 4);
  }
}

TEST(Pipeline, MissingCheckpointFailsBeforeWriting) {
  fs::path out = scratch("missing_ckpt");
  RunConfig c = small_run(out);
  c.field = FieldKind::kMapper;
  c.checkpoints.mapper = out.parent_path() / "scenemotion_no_such_checkpoint.json";
  try {
    run_pipeline(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "models");
  }
  EXPECT_FALSE(fs::exists(out));
}

TEST(Pipeline, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvalidArgument), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kDimension), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kScene), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kPlanning), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::kTraining), 5);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.actions = {ActionLabel::kWalk, ActionLabel::kLie};
  c.seed = 99;
  c.samples = 3;
  c.field = FieldKind::kShared;
  c.stages.optimize = false;
  c.jitter = 0.01;
  RunConfig d = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(d), to_json(c));
}

TEST(Config, SchemaErrors) {
  auto kind_and_message = [](const nlohmann::json& j) -> std::pair<ErrorKind, std::string> {
    try {
      run_config_from_json(j);
    } catch (const Error& e) {
      return {e.kind(), e.what()};
    }
    return {ErrorKind::kInvalidArgument, ""};
  };
  auto [k1, m1] = kind_and_message({{"sede", 1}});
  EXPECT_EQ(k1, ErrorKind::kConfig);
  EXPECT_EQ(m1.rfind("$.sede", 0), 0u);
  auto [k2, m2] = kind_and_message({{"stages", {{"plan", true}}}});
  EXPECT_EQ(m2.rfind("$.stages.plan", 0), 0u);
  auto [k3, m3] = kind_and_message({{"samples", "two"}});
  EXPECT_EQ(m3.rfind("$.samples", 0), 0u);
  auto [k4, m4] = kind_and_message({{"actions", {"sit", "dance"}}});
  EXPECT_EQ(m4.rfind("$.actions[1]", 0), 0u);
  auto [k5, m5] = kind_and_message({{"field", "magic"}});
  EXPECT_EQ(m5.rfind("$.field", 0), 0u);
}

TEST(Config, ValidateRejectsBadValues) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.actions.clear();
  EXPECT_THROW(c.validate(), Error);
  c.actions = {ActionLabel::kSit};
  c.samples = 0;
  EXPECT_THROW(c.validate(), Error);
  c.samples = 1;
  EXPECT_NO_THROW(c.validate());
  c.field = FieldKind::kMapper;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Eval, FewerAnchorsThanClusters) {
  fs::path dir = scratch("eval_few");
  fs::create_directories(dir);
  std::vector<Anchor> anchors(19);
  for (int i = 0; i < 19; ++i) anchors[i].t = {double(i), 0.0, 0.5};
  io::write_json(dir / "anchors.json", io::anchors_to_json(anchors));
  EvalRequest req;
  req.anchors = dir / "anchors.json";
  try {
    cmd_eval(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fewer points than K"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Eval, ClosedFormReport) {
  fs::path dir = scratch("eval_closed");
  fs::create_directories(dir);
  // 20 well-separated groups of 5 anchors each: position entropy ln 20.
  std::vector<Anchor> anchors;
  for (int g = 0; g < 20; ++g)
    for (int n = 0; n < 5; ++n) {
      Anchor a;
      a.t = {10.0 * (g % 5) + 0.01 * n, 10.0 * (g / 5), 0.5};
      anchors.push_back(a);
    }
  auto aj = io::anchors_to_json(anchors);
  for (auto& e : aj["anchors"]) e.erase("theta");
  io::write_json(dir / "anchors.json", aj);

  // Reference path plus two mirror images. The reference also counts as a
  // sample, so the deviations at fraction f are {0, d, d} with d = 2 min(f, 1 - f)
  // and the population std is d * sqrt(2) / 3.
  io::PathSet set{0.5, {}};
  auto record = [](std::vector<Vec3> pts) {
    io::PathRecord r;
    r.points = std::move(pts);
    for (const Vec3& p : r.points) r.cells.push_back({int(std::lround(p.x / 0.5)), int(std::lround(p.y / 0.5))});
    return r;
  };
  set.paths.push_back(record({{0, 0, 0}, {2, 0, 0}, {4, 0, 0}}));
  set.paths.push_back(record({{0, 0, 0}, {2, 1, 0}, {4, 0, 0}}));
  set.paths.push_back(record({{0, 0, 0}, {2, -1, 0}, {4, 0, 0}}));
  io::write_json(dir / "paths.json", io::paths_to_json(set));

  EvalRequest req;
  req.anchors = dir / "anchors.json";
  req.paths = dir / "paths.json";
  nlohmann::json r = cmd_eval(req);
  EXPECT_EQ(r["anchors"]["mode"], "position");
  EXPECT_EQ(r["anchors"]["count"], 100);
  EXPECT_NEAR(r["anchors"]["position"]["entropy"].get<double>(), std::log(20.0), 1e-9);
  EXPECT_FALSE(r["anchors"].contains("full"));
  EXPECT_EQ(r["paths"]["count"], 3);
  auto stds = r["paths"]["std"].get<std::vector<double>>();
  auto fractions = r["paths"]["fractions"].get<std::vector<double>>();
  ASSERT_EQ(stds.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    double d = 2.0 * std::min(fractions[i], 1.0 - fractions[i]);
    EXPECT_NEAR(stds[i], d * std::sqrt(2.0) / 3.0, 1e-12);
  }
  fs::remove_all(dir);
}

TEST(Artifacts, TrajectoryRoundTrip) {
  Trajectory t;
  for (int k = 0; k < 4; ++k) t.frames.push_back({{0.1 * k, 1.0 / 3.0, 0.9}, rot6_from_yaw(0.2 * k), ActionLabel::kWalk});
  std::vector<Trajectory> ts{t};
  auto back = io::trajectories_from_json(io::trajectories_to_json(ts));
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].frames.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(back[0].frames[k].t.x, t.frames[k].t.x);
    EXPECT_EQ(back[0].frames[k].t.y, t.frames[k].t.y);
    EXPECT_EQ(back[0].frames[k].phi, t.frames[k].phi);
    EXPECT_EQ(back[0].frames[k].action, ActionLabel::kWalk);
  }
}

TEST(Train, SameSeedSameCheckpoint) {
  fs::path dir = scratch("train");
  fs::create_directories(dir);
  nlohmann::json synth = {{"per_action", 20}, {"hidden", 16}, {"train", {{"epochs", 2}}}};
  auto r1 = cmd_train(TrainTarget::kPose, synth, 5, dir / "a.json");
  auto r2 = cmd_train(TrainTarget::kPose, synth, 5, dir / "b.json");
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  ASSERT_EQ(r1.trace.size(), 2u);
  for (const auto& e : r1.trace) EXPECT_TRUE(std::isfinite(e.loss));
  EXPECT_TRUE(fs::exists(dir / "a.json.trace.json"));
  EXPECT_THROW(cmd_train(TrainTarget::kPose, {{"epochs", 2}}, 5, dir / "c.json"), Error);
  EXPECT_THROW(train_target_from_string("planner"), Error);
  fs::remove_all(dir);
}

TEST(ExportObj, WritesScenePlusPolyline) {
  Trajectory t;
  for (int k = 0; k < 3; ++k) t.frames.push_back({{double(k), 0.0, 0.9}, rot6_from_yaw(0.0), ActionLabel::kWalk});
  TriangleMesh scene = fixtures::make_box({0, 0, 0}, {1, 1, 1});
  std::ostringstream os;
  export_obj(os, {t}, &scene, {});
  std::istringstream in(os.str());
  ObjStats stats;
  TriangleMesh back = parse_obj(in, UpAxis::kZ, &stats);
  EXPECT_EQ(back.vertices.size(), scene.vertices.size() + 3);
  EXPECT_EQ(back.faces.size(), scene.faces.size());
}

namespace {

void expect_json_near(const nlohmann::json& got, const nlohmann::json& want, const std::string& path) {
  if (want.is_number_float() || (want.is_number() && got.is_number_float())) {
    ASSERT_TRUE(got.is_number()) << path;
    EXPECT_NEAR(got.get<double>(), want.get<double>(), 1e-9) << path;
  } else if (want.is_object()) {
    ASSERT_TRUE(got.is_object()) << path;
    EXPECT_EQ(got.size(), want.size()) << path;
    for (auto it = want.begin(); it != want.end(); ++it) {
      ASSERT_TRUE(got.contains(it.key())) << path << "." << it.key();
      expect_json_near(got[it.key()], it.value(), path + "." + it.key());
    }
  } else if (want.is_array()) {
    ASSERT_TRUE(got.is_array()) << path;
    ASSERT_EQ(got.size(), want.size()) << path;
    for (std::size_t i = 0; i < want.size(); ++i) expect_json_near(got[i], want[i], path + "[" + std::to_string(i) + "]");
  } else {
    EXPECT_EQ(got, want) << path;
  }
}

}  // namespace

TEST(Eval, CopiesOfOnePathHaveZeroStd) {
  fs::path dir = scratch("eval_copies");
  fs::create_directories(dir);
  Scene scene = build_scene(fixtures::make_test_room(), 0.1);
  WalkableMap map = build_walkable(scene.grid);
  GridPath p = astar(map, nearest_walkable(map, {0.6, 0.6, 0.0}), nearest_walkable(map, {5.8, 5.8, 0.0}), field_standard(map));
  io::PathSet set{0.1, {}};
  for (int i = 0; i < 100; ++i) set.paths.push_back({p.cells, map.layer, path_points(map, p), p.cost, FieldKind::kStandard, 0});
  io::write_json(dir / "paths.json", io::paths_to_json(set));
  EvalRequest req;
  req.paths = dir / "paths.json";
  for (double s : cmd_eval(req)["paths"]["std"].get<std::vector<double>>()) EXPECT_EQ(s, 0.0);
  fs::remove_all(dir);
}

TEST(Eval, BundledFixturesMatchGoldenReport) {
  const fs::path data = SCENEMOTION_TEST_DATA_DIR;
  EvalRequest req;
  req.anchors = data / "anchors.json";
  req.paths = data / "paths.json";
  req.trajectories = data / "trajectories.json";
  req.reference_trajectories = data / "reference_trajectories.json";
  req.scene = kBuiltinTestRoom;
  req.clusters = 5;
  expect_json_near(cmd_eval(req), io::read_json(data / "golden_report.json"), "$");
}
