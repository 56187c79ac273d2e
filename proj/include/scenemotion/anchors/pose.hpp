#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/nn/cvae.hpp"

namespace scenemotion {

/// Synthetic pose distribution: one isotropic Gaussian per action. Stands in
/// for a learned body-pose prior and doubles as the test oracle for
/// conditioned sampling.
struct PoseMixture {
  std::array<PoseVector, kActionCount> means{};
  double stddev = 0.3;

  PoseVector sample(ActionLabel a, Rng& rng) const {
    PoseVector p = means[static_cast<std::size_t>(a)];
    for (double& v : p) v += stddev * rng.normal();
    return p;
  }

  /// Action whose mean is nearest (L2) to `p`; ties go to the lower label.
  ActionLabel nearest_component(const PoseVector& p) const {
    ActionLabel best = ActionLabel::kSit;
    double best_d = std::numeric_limits<double>::infinity();
    for (ActionLabel a : kAllActions) {
      double d = 0.0;
      const auto& m = means[static_cast<std::size_t>(a)];
      for (std::size_t i = 0; i < kPoseDim; ++i) d += (p[i] - m[i]) * (p[i] - m[i]);
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    return best;
  }
};

inline constexpr std::uint64_t kDefaultMixtureSeed = 7;

/// Component means drawn from N(0, 1) per coordinate.
inline PoseMixture make_pose_mixture(std::uint64_t seed = kDefaultMixtureSeed, double stddev = 0.3) {
  PoseMixture m;
  m.stddev = stddev;
  Rng rng(seed);
  for (auto& mean : m.means) {
    for (double& v : mean) v = rng.normal();
  }
  return m;
}

struct PoseDataset {
  nn::Matrix poses;       // one 32-dim pose per row
  nn::Matrix conditions;  // matching one-hot action rows
};

inline PoseDataset make_pose_dataset(const PoseMixture& mixture, int per_action, std::uint64_t seed) {
  if (per_action < 1) throw Error(ErrorKind::kConfig, "pose dataset needs at least one sample per action");
  const int n = per_action * static_cast<int>(kActionCount);
  PoseDataset ds{nn::Matrix(n, static_cast<Eigen::Index>(kPoseDim)), nn::Matrix::Zero(n, kActionCount)};
  Rng rng(seed);
  for (int r = 0; r < n; ++r) {
    ActionLabel a = kAllActions[static_cast<std::size_t>(r) % kActionCount];
    PoseVector p = mixture.sample(a, rng);
    for (std::size_t i = 0; i < kPoseDim; ++i) ds.poses(r, static_cast<Eigen::Index>(i)) = p[i];
    ds.conditions(r, static_cast<Eigen::Index>(a)) = 1.0;
  }
  return ds;
}

struct PoseTrainConfig {
  std::uint64_t mixture_seed = kDefaultMixtureSeed;
  double mixture_stddev = 0.3;
  int per_action = 400;
  nn::TrainOptions train{.epochs = 40, .batch_size = 8, .learning_rate = 1e-4, .kl_weight = 1.0,
                         .warmup_fraction = 0.1, .seed = 0};
  int hidden = nn::kDefaultHiddenWidth;
  int latent_dim = nn::kDefaultLatentDim;
};

inline nn::TrainResult train_pose_model(const PoseTrainConfig& cfg) {
  PoseMixture mixture = make_pose_mixture(cfg.mixture_seed, cfg.mixture_stddev);
  PoseDataset ds = make_pose_dataset(mixture, cfg.per_action, mix_seed(cfg.train.seed, 10, 0));
  nn::CvaeModel model = nn::make_cvae({static_cast<int>(kPoseDim), static_cast<int>(kActionCount), cfg.latent_dim,
                                       cfg.hidden, {}},
                                      mix_seed(cfg.train.seed, 11, 0), "pose");
  return nn::train_cvae(std::move(model), ds.poses, ds.conditions, cfg.train);
}

inline void require_pose_model(const nn::CvaeModel& model) {
  if (model.input_dim != static_cast<int>(kPoseDim) || model.condition_dim != static_cast<int>(kActionCount)) {
    throw Error(ErrorKind::kConfig, "model is not a pose model (needs 32-dim output and 5-wide action condition)");
  }
}

/// Decoder output for a seeded standard-normal latent and the action one-hot.
inline PoseVector sample_pose(const nn::CvaeModel& model, ActionLabel action, std::uint64_t seed) {
  require_pose_model(model);
  Rng rng(seed);
  std::vector<double> z = nn::sample_latent(model, rng);
  auto c = one_hot(action);
  std::vector<double> out = nn::decode(model, z, c);
  PoseVector p{};
  std::copy(out.begin(), out.end(), p.begin());
  return p;
}

/// Pose source for the pipeline: a trained pose model when available,
/// otherwise the synthetic mixture itself.
struct PoseSampler {
  std::optional<nn::CvaeModel> model;
  PoseMixture prior = make_pose_mixture();

  PoseVector sample(ActionLabel action, std::uint64_t seed) const {
    if (model) return sample_pose(*model, action, seed);
    Rng rng(seed);
    return prior.sample(action, rng);
  }
};

}  // namespace scenemotion
