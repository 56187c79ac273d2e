#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/anchors/body.hpp"
#include "scenemotion/anchors/pose.hpp"
#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/core/rotation.hpp"
#include "scenemotion/nn/cvae.hpp"
#include "scenemotion/scene/bps.hpp"
#include "scenemotion/scene/fixtures.hpp"
#include "scenemotion/scene/scene.hpp"

namespace scenemotion {

// Offset model input: [dt / cell_size (3), dphi (6)]; condition: [theta (32), BPS at the anchor].
inline constexpr int kRefinerOffsetDim = 9;

inline void require_refiner_model(const nn::CvaeModel& model, const BasisSet& basis) {
  if (model.input_dim != kRefinerOffsetDim) throw Error(ErrorKind::kConfig, "model is not a place-refiner model");
  if (!model.basis_seed || *model.basis_seed != basis.seed || model.basis_size != basis.points.size()) {
    throw Error(ErrorKind::kConfig, "refiner model was trained with a different basis-point set");
  }
  if (model.condition_dim != static_cast<int>(kPoseDim + basis.points.size())) {
    throw Error(ErrorKind::kConfig, "refiner model condition width does not match pose + basis size");
  }
}

inline std::vector<double> refiner_condition(const PoseVector& theta, std::span<const Vec3> scene_points,
                                             const Vec3& at, const BasisSet& basis) {
  std::vector<double> c(theta.begin(), theta.end());
  BpsFeature f = bps_encode(scene_points, at, kDefaultCageHalfExtent, basis);
  c.insert(c.end(), f.begin(), f.end());
  return c;
}

struct RefinedPlacement {
  Anchor anchor;
  Vec3 delta_t;      // applied translation offset (after the clamp)
  Rot6 delta_phi{};  // decoded rotation offset
  int attempts = 1;
};

/// Applies the decoded offset for one explicit latent. The translation is
/// clamped to norm cell_size; phi + dphi is orthonormalized, and an error is
/// raised if it is degenerate.
inline RefinedPlacement refine_placement_with_latent(const nn::CvaeModel& model, const Anchor& anchor,
                                                     std::span<const Vec3> scene_points, const BasisSet& basis,
                                                     double cell_size, std::span<const double> z) {
  require_refiner_model(model, basis);
  std::vector<double> cond = refiner_condition(anchor.theta, scene_points, anchor.t, basis);
  std::vector<double> out = nn::decode(model, z, cond);
  Vec3 dt{out[0] * cell_size, out[1] * cell_size, out[2] * cell_size};
  double n = norm(dt);
  if (!std::isfinite(n)) throw Error(ErrorKind::kTraining, "refiner produced a non-finite offset");
  if (n > cell_size) dt = dt * (cell_size / n);
  RefinedPlacement r;
  r.delta_t = dt;
  Rot6 phi = anchor.phi;
  for (int i = 0; i < 6; ++i) {
    r.delta_phi[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(3 + i)];
    phi[static_cast<std::size_t>(i)] += out[static_cast<std::size_t>(3 + i)];
  }
  if (!orthonormalizable(phi)) throw Error(ErrorKind::kInvalidArgument, "refined rotation is degenerate");
  r.anchor = anchor;
  r.anchor.t = anchor.t + dt;
  r.anchor.phi = rot6_from_matrix(rotation_from_6d(phi));
  return r;
}

/// Seeded refinement: draws a latent, retrying with a fresh one (up to 8
/// draws) while the refined rotation is degenerate.
inline RefinedPlacement refine_placement(const nn::CvaeModel& model, const Anchor& anchor,
                                         std::span<const Vec3> scene_points, const BasisSet& basis, double cell_size,
                                         std::uint64_t seed) {
  constexpr int kMaxAttempts = 8;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(mix_seed(seed, 0, static_cast<std::uint64_t>(attempt)));
    std::vector<double> z = nn::sample_latent(model, rng);
    try {
      RefinedPlacement r = refine_placement_with_latent(model, anchor, scene_points, basis, cell_size, z);
      r.attempts = attempt + 1;
      return r;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInvalidArgument) throw;
    }
  }
  throw Error(ErrorKind::kTraining, "refiner produced a degenerate rotation for 8 latent draws");
}

struct RefinerDataset {
  nn::Matrix offsets;     // [dt / cell_size, dphi]
  nn::Matrix conditions;  // [theta, BPS]
};

struct RefinerTrainConfig {
  int rooms = 8;
  int per_room = 125;
  double cell_size = 0.1;
  std::uint64_t basis_seed = 1234;
  std::size_t basis_size = kDefaultBasisSize;
  bool zero_offsets = false;  // degenerate dataset: candidate placed at the true placement
  std::uint64_t mixture_seed = kDefaultMixtureSeed;
  nn::TrainOptions train{.epochs = 40, .batch_size = 8, .learning_rate = 1e-4, .kl_weight = 1.0,
                         .warmup_fraction = 0.1, .seed = 0};
  int hidden = nn::kDefaultHiddenWidth;
  std::vector<int> condition_hidden{256};
};

/// Synthetic refiner data. A true placement is drawn on a random supported
/// surface point of a random room with a continuous yaw; its candidate is one
/// of the four surrounding horizontal cell centers (at the true height cell)
/// and one of the two 45-degree yaws bracketing the true yaw. The target is
/// the offset from candidate to truth, the context is BPS at the candidate.
inline RefinerDataset make_refiner_dataset(const RefinerTrainConfig& cfg, const BasisSet& basis) {
  const PoseMixture mixture = make_pose_mixture(cfg.mixture_seed);
  std::vector<std::vector<double>> xs, cs;
  for (int room = 0; room < cfg.rooms; ++room) {
    Rng rng(mix_seed(cfg.train.seed, 20, static_cast<std::uint64_t>(room)));
    Scene scene = build_scene(fixtures::make_random_room(rng), cfg.cell_size);
    const VoxelGrid& g = scene.grid;
    std::vector<std::size_t> surface;
    for (std::size_t idx = 0; idx < g.cell_count(); ++idx) {
      CellIndex c = g.unravel(idx);
      if (c.k > 0 && !g.occupied[idx] && g.is_occupied({c.i, c.j, c.k - 1})) surface.push_back(idx);
    }
    if (surface.empty()) continue;
    int made = 0;
    for (int attempt = 0; made < cfg.per_room && attempt < cfg.per_room * 20; ++attempt) {
      ActionLabel action = kAllActions[rng.below(kActionCount)];
      PoseVector theta = mixture.sample(action, rng);
      ProxyBody body = proxy_body(theta, action);
      CellIndex c = g.unravel(surface[rng.below(surface.size())]);
      Vec3 cc = g.center(c);
      double x = cc.x + rng.uniform(-0.5, 0.5) * g.cell_size;
      double y = cc.y + rng.uniform(-0.5, 0.5) * g.cell_size;
      auto zs = surface_below(g, x, y, cc.z + 0.5 * g.cell_size, cc.z - 1.5 * g.cell_size);
      if (!zs) continue;
      double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
      Vec3 truth{x, y, *zs - lowest_contact_offset(body)};

      Vec3 cand = truth;
      double cand_yaw = yaw;
      if (!cfg.zero_offsets) {
        double ux = (x - g.origin.x) / g.cell_size - 0.5, uy = (y - g.origin.y) / g.cell_size - 0.5;
        double fx = std::floor(ux) + static_cast<double>(rng.below(2));
        double fy = std::floor(uy) + static_cast<double>(rng.below(2));
        double fz = std::floor((truth.z - g.origin.z) / g.cell_size);
        cand = {g.origin.x + (fx + 0.5) * g.cell_size, g.origin.y + (fy + 0.5) * g.cell_size,
                g.origin.z + (fz + 0.5) * g.cell_size};
        double k = std::floor(yaw / (std::numbers::pi / 4.0)) + static_cast<double>(rng.below(2));
        cand_yaw = k * (std::numbers::pi / 4.0);
      }
      Rot6 pt = rot6_from_yaw(yaw), pc = rot6_from_yaw(cand_yaw);
      std::vector<double> xrow;
      Vec3 dt = (truth - cand) / g.cell_size;
      xrow = {dt.x, dt.y, dt.z};
      for (int i = 0; i < 6; ++i) xrow.push_back(pt[static_cast<std::size_t>(i)] - pc[static_cast<std::size_t>(i)]);
      xs.push_back(std::move(xrow));
      cs.push_back(refiner_condition(theta, scene.mesh.vertices, cand, basis));
      ++made;
    }
  }
  if (xs.empty()) throw Error(ErrorKind::kTraining, "refiner dataset generation produced no samples");
  RefinerDataset ds{nn::Matrix(static_cast<Eigen::Index>(xs.size()), kRefinerOffsetDim),
                    nn::Matrix(static_cast<Eigen::Index>(cs.size()), static_cast<Eigen::Index>(cs[0].size()))};
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (std::size_t i = 0; i < xs[r].size(); ++i) ds.offsets(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = xs[r][i];
    for (std::size_t i = 0; i < cs[r].size(); ++i) ds.conditions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = cs[r][i];
  }
  return ds;
}

inline nn::TrainResult train_place_refiner(const RefinerTrainConfig& cfg) {
  BasisSet basis = make_basis(cfg.basis_size, cfg.basis_seed);
  RefinerDataset ds = make_refiner_dataset(cfg, basis);
  nn::CvaeModel model = nn::make_cvae({kRefinerOffsetDim, static_cast<int>(kPoseDim + cfg.basis_size),
                                       nn::kDefaultLatentDim, cfg.hidden, cfg.condition_hidden},
                                      mix_seed(cfg.train.seed, 21, 0), "refiner");
  model.basis_seed = cfg.basis_seed;
  model.basis_size = cfg.basis_size;
  return nn::train_cvae(std::move(model), ds.offsets, ds.conditions, cfg.train);
}

}  // namespace scenemotion
