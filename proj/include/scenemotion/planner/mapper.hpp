#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/nn/cvae.hpp"
#include "scenemotion/planner/astar.hpp"
#include "scenemotion/planner/walkable.hpp"
#include "scenemotion/scene/bps.hpp"
#include "scenemotion/scene/fixtures.hpp"
#include "scenemotion/scene/scene.hpp"

namespace scenemotion {

// Mapper: a CVAE over the normalized 2D walking direction (d + 1) / 2,
// conditioned on the BPS context at the walker's position.
inline constexpr int kMapperOutputDim = 2;
inline constexpr double kMapperKappa = 4.0;
inline constexpr double kMapperContextHeight = 1.0;  // cage center above the floor

inline void require_mapper_model(const nn::CvaeModel& model, const BasisSet& basis) {
  if (model.input_dim != kMapperOutputDim) throw Error(ErrorKind::kConfig, "model is not a mapper model");
  if (!model.basis_seed || *model.basis_seed != basis.seed || model.basis_size != basis.points.size() ||
      model.condition_dim != static_cast<int>(basis.points.size())) {
    throw Error(ErrorKind::kConfig, "mapper model was trained with a different basis-point set");
  }
}

/// Per-compass-direction feasibility from a decoded output: the output maps
/// back to a direction 2*o - 1 with angle a, and direction k gets
/// exp(kappa * (cos(k*45deg - a) - 1)). A vanishing direction gives all ones.
inline std::array<double, kDirectionCount> direction_scores(double o0, double o1, double kappa = kMapperKappa) {
  std::array<double, kDirectionCount> m{};
  double dx = 2.0 * o0 - 1.0, dy = 2.0 * o1 - 1.0;
  if (std::hypot(dx, dy) < 1e-9) {
    m.fill(1.0);
    return m;
  }
  double a = std::atan2(dy, dx);
  for (int k = 0; k < kDirectionCount; ++k) m[k] = std::exp(kappa * (std::cos(k * std::numbers::pi / 4.0 - a) - 1.0));
  return m;
}

/// Scene-dependent part of the mapper decoder, computed once per scene:
/// the first decoder layer's pre-activation contribution from the context
/// feature of every walkable cell.
struct MapperContext {
  std::uint64_t basis_seed = 0;
  std::size_t basis_size = 0;
  std::vector<std::size_t> cells;  // walkable map indices
  nn::Matrix context_pre;          // one row per cell
  int nx = 0;
  int ny = 0;
};

inline Vec3 mapper_cage_center(const WalkableMap& map, const Cell2& c) {
  Vec3 p = map.position(c);
  p.z += kMapperContextHeight;
  return p;
}

inline MapperContext make_mapper_context(const nn::CvaeModel& model, const WalkableMap& map,
                                         std::span<const Vec3> scene_points, const BasisSet& basis) {
  require_mapper_model(model, basis);
  MapperContext ctx;
  ctx.basis_seed = basis.seed;
  ctx.basis_size = basis.points.size();
  ctx.nx = map.nx;
  ctx.ny = map.ny;
  for (std::size_t idx = 0; idx < map.walkable.size(); ++idx) {
    if (map.walkable[idx]) ctx.cells.push_back(idx);
  }
  const nn::DenseLayer& first = model.decoder.front();
  const int d = model.latent_dim;
  const Eigen::Index h = first.outputs();
  ctx.context_pre.resize(static_cast<Eigen::Index>(ctx.cells.size()), h);
  nn::Matrix cond(1, static_cast<Eigen::Index>(basis.points.size()));
  for (std::size_t r = 0; r < ctx.cells.size(); ++r) {
    BpsFeature f = bps_encode(scene_points, mapper_cage_center(map, map.cell(ctx.cells[r])), kDefaultCageHalfExtent, basis);
    for (std::size_t i = 0; i < f.size(); ++i) cond(0, static_cast<Eigen::Index>(i)) = f[i];
    nn::Matrix cf = nn::condition_features(model, cond);
    ctx.context_pre.row(static_cast<Eigen::Index>(r)) =
        cf * first.weights.bottomRows(first.weights.rows() - d) + first.bias;
  }
  return ctx;
}

/// Decoded directions for every context row given one latent; rows are
/// evaluated independently so identical contexts give identical outputs.
inline nn::Matrix mapper_decode_rows(const nn::CvaeModel& model, const nn::Matrix& context_pre, std::span<const double> z) {
  if (static_cast<int>(z.size()) != model.latent_dim) throw Error(ErrorKind::kDimension, "mapper latent width mismatch");
  const nn::DenseLayer& first = model.decoder.front();
  nn::RowVector zrow = Eigen::Map<const nn::RowVector>(z.data(), static_cast<Eigen::Index>(z.size())) *
                       first.weights.topRows(model.latent_dim);
  std::vector<nn::DenseLayer> rest(model.decoder.begin() + 1, model.decoder.end());
  nn::Matrix out(context_pre.rows(), model.input_dim);
  nn::Matrix row(1, context_pre.cols());
  for (Eigen::Index r = 0; r < context_pre.rows(); ++r) {
    row = context_pre.row(r) + zrow;
    nn::detail::apply_activation(first.activation, row);
    out.row(r) = rest.empty() ? row : nn::mlp_forward(rest, row);
  }
  return out;
}

/// One latent per episode, drawn from `seed`; every walkable cell gets the
/// eight direction scores decoded from its context. Non-walkable cells keep 1.
inline CostField field_mapper(const nn::CvaeModel& model, const MapperContext& ctx, const BasisSet& basis,
                              std::uint64_t seed) {
  require_mapper_model(model, basis);
  if (ctx.basis_seed != basis.seed || ctx.basis_size != basis.points.size()) {
    throw Error(ErrorKind::kConfig, "mapper context was built with a different basis-point set");
  }
  Rng rng(seed);
  std::vector<double> z = nn::sample_latent(model, rng);
  nn::Matrix out = mapper_decode_rows(model, ctx.context_pre, z);
  CostField f{FieldKind::kMapper, seed, ctx.nx, ctx.ny,
              std::vector<double>(static_cast<std::size_t>(ctx.nx) * ctx.ny * kDirectionCount, 1.0)};
  for (std::size_t r = 0; r < ctx.cells.size(); ++r) {
    auto m = direction_scores(out(static_cast<Eigen::Index>(r), 0), out(static_cast<Eigen::Index>(r), 1));
    for (int d = 0; d < kDirectionCount; ++d) f.m[ctx.cells[r] * kDirectionCount + static_cast<std::size_t>(d)] = m[d];
  }
  return f;
}

inline CostField field_mapper(const nn::CvaeModel& model, const WalkableMap& map, std::span<const Vec3> scene_points,
                              const BasisSet& basis, std::uint64_t seed) {
  return field_mapper(model, make_mapper_context(model, map, scene_points, basis), basis, seed);
}

struct MapperTrainConfig {
  int rooms = 6;
  int paths_per_room = 16;
  double cell_size = 0.2;
  int window = 60;           // frames per training clip
  int stride = 30;           // frames between clip starts
  double walk_speed = 1.2;   // m/s
  double fps = 30.0;
  double jitter = 0.1;       // lateral waypoint noise, meters
  std::uint64_t basis_seed = 1234;
  std::size_t basis_size = kDefaultBasisSize;
  std::optional<std::array<double, 2>> constant_direction;  // degenerate dataset: every target is this direction
  nn::TrainOptions train{};
  int hidden = nn::kDefaultHiddenWidth;
  std::vector<int> condition_hidden{256};
};

struct MapperDataset {
  nn::Matrix targets;     // (direction + 1) / 2
  nn::Matrix conditions;  // BPS at clip start
};

/// Points spaced `spacing` apart along a polyline, starting at its first vertex.
inline std::vector<Vec3> resample_polyline(const std::vector<Vec3>& pts, double spacing) {
  std::vector<Vec3> out;
  if (pts.empty()) return out;
  out.push_back(pts.front());
  double carry = 0.0;  // distance already covered since the last output point
  for (std::size_t s = 1; s < pts.size(); ++s) {
    Vec3 a = pts[s - 1], b = pts[s];
    double len = distance(a, b);
    double pos = spacing - carry;
    while (pos <= len) {
      out.push_back(a + (b - a) * (pos / len));
      pos += spacing;
    }
    carry = len - (pos - spacing);
  }
  return out;
}

/// Synthetic walk clips: standard A* paths between random floor cells of
/// procedurally generated rooms, with jittered waypoints, resampled at walking
/// speed and cut into windows. Target = normalized start-to-end direction.
inline MapperDataset make_mapper_dataset(const MapperTrainConfig& cfg, const BasisSet& basis) {
  std::vector<std::array<double, 2>> targets;
  std::vector<BpsFeature> conds;
  const double spacing = cfg.walk_speed / cfg.fps;
  for (int room = 0; room < cfg.rooms; ++room) {
    Rng rng(mix_seed(cfg.train.seed, 30, static_cast<std::uint64_t>(room)));
    Scene scene = build_scene(fixtures::make_random_room(rng), cfg.cell_size);
    WalkableMap map = build_walkable(scene.grid);
    std::vector<std::size_t> free;
    for (std::size_t idx = 0; idx < map.walkable.size(); ++idx) {
      if (map.walkable[idx]) free.push_back(idx);
    }
    CostField standard = field_standard(map);
    int made = 0;
    for (int attempt = 0; made < cfg.paths_per_room && attempt < cfg.paths_per_room * 10; ++attempt) {
      Cell2 a = map.cell(free[rng.below(free.size())]), b = map.cell(free[rng.below(free.size())]);
      GridPath path;
      try {
        path = astar(map, a, b, standard);
      } catch (const NoPathError&) {
        continue;
      }
      std::vector<Vec3> pts = path_points(map, path);
      for (std::size_t s = 1; s + 1 < pts.size(); ++s) {
        pts[s].x += rng.normal(0.0, cfg.jitter);
        pts[s].y += rng.normal(0.0, cfg.jitter);
      }
      std::vector<Vec3> frames = resample_polyline(pts, spacing);
      if (static_cast<int>(frames.size()) < cfg.window) continue;
      ++made;
      for (std::size_t s = 0; s + static_cast<std::size_t>(cfg.window) <= frames.size();
           s += static_cast<std::size_t>(cfg.stride)) {
        Vec3 d = frames[s + static_cast<std::size_t>(cfg.window) - 1] - frames[s];
        double n = std::hypot(d.x, d.y);
        if (n < 1e-9) continue;
        std::array<double, 2> dir{d.x / n, d.y / n};
        if (cfg.constant_direction) dir = *cfg.constant_direction;
        targets.push_back({(dir[0] + 1.0) / 2.0, (dir[1] + 1.0) / 2.0});
        Vec3 center = frames[s];
        center.z += kMapperContextHeight;
        conds.push_back(bps_encode(scene.mesh, center, kDefaultCageHalfExtent, basis));
      }
    }
  }
  if (targets.empty()) throw Error(ErrorKind::kTraining, "mapper dataset generation produced no clips");
  MapperDataset ds{nn::Matrix(static_cast<Eigen::Index>(targets.size()), kMapperOutputDim),
                   nn::Matrix(static_cast<Eigen::Index>(conds.size()), static_cast<Eigen::Index>(basis.points.size()))};
  for (std::size_t r = 0; r < targets.size(); ++r) {
    ds.targets(static_cast<Eigen::Index>(r), 0) = targets[r][0];
    ds.targets(static_cast<Eigen::Index>(r), 1) = targets[r][1];
    for (std::size_t i = 0; i < conds[r].size(); ++i) {
      ds.conditions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = conds[r][i];
    }
  }
  return ds;
}

inline nn::TrainResult train_mapper(const MapperTrainConfig& cfg) {
  BasisSet basis = make_basis(cfg.basis_size, cfg.basis_seed);
  MapperDataset ds = make_mapper_dataset(cfg, basis);
  nn::CvaeModel model = nn::make_cvae({kMapperOutputDim, static_cast<int>(cfg.basis_size), nn::kDefaultLatentDim,
                                       cfg.hidden, cfg.condition_hidden},
                                      mix_seed(cfg.train.seed, 31, 0), "mapper");
  model.basis_seed = cfg.basis_seed;
  model.basis_size = cfg.basis_size;
  return nn::train_cvae(std::move(model), ds.targets, ds.conditions, cfg.train);
}

}  // namespace scenemotion
