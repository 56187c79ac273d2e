#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scenemotion/core/error.hpp"
#include "scenemotion/trajectory/trajectory.hpp"

namespace scenemotion {

/// Mean L2 distance over all unordered pairs.
inline double apd(const std::vector<std::vector<double>>& samples) {
  if (samples.size() < 2) throw Error(ErrorKind::kInvalidArgument, "APD needs at least 2 samples");
  for (const auto& s : samples) {
    if (s.size() != samples.front().size()) throw Error(ErrorKind::kDimension, "APD samples have different lengths");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < samples[i].size(); ++a) s += (samples[i][a] - samples[j][a]) * (samples[i][a] - samples[j][a]);
      total += std::sqrt(s);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (n - 1)
};

inline GaussianMoments fit_gaussian(const std::vector<std::vector<double>>& set) {
  if (set.empty()) throw Error(ErrorKind::kInvalidArgument, "empty sample set");
  const auto d = static_cast<Eigen::Index>(set.front().size());
  const auto n = static_cast<Eigen::Index>(set.size());
  if (n < d + 1) {
    throw Error(ErrorKind::kInvalidArgument, "need at least dim + 1 samples (" + std::to_string(n) + " for dim " +
                                                 std::to_string(d) + ")");
  }
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(set[static_cast<std::size_t>(i)].size()) != d) {
      throw Error(ErrorKind::kDimension, "samples have unequal dimensions");
    }
    for (Eigen::Index a = 0; a < d; ++a) x(i, a) = set[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
  }
  GaussianMoments g;
  g.mean = x.colwise().mean().transpose();
  Eigen::MatrixXd c = x.rowwise() - g.mean.transpose();
  g.cov = (c.transpose() * c) / static_cast<double>(n - 1);
  return g;
}

/// Square root of a symmetric matrix with negative eigenvalues clipped to 0.
inline Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), with the trace of
/// the cross term taken as Tr((A^(1/2) S_b A^(1/2))^(1/2)), A = S_a.
inline double frechet_gaussian(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mean.size() != b.mean.size()) throw Error(ErrorKind::kDimension, "sample sets have different dimensions");
  Eigen::MatrixXd ra = symmetric_sqrt(a.cov);
  Eigen::MatrixXd cross = symmetric_sqrt(ra * b.cov * ra);
  double v = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
  return std::max(0.0, v);
}

inline double frechet_gaussian(const std::vector<std::vector<double>>& set_a, const std::vector<std::vector<double>>& set_b) {
  return frechet_gaussian(fit_gaussian(set_a), fit_gaussian(set_b));
}

/// Per-frame rows t (+) phi.
inline std::vector<std::vector<double>> frame_parameters(std::span<const Trajectory> trajs) {
  std::vector<std::vector<double>> rows;
  for (const auto& t : trajs) {
    for (const Frame& f : t.frames) {
      std::vector<double> r{f.t.x, f.t.y, f.t.z};
      r.insert(r.end(), f.phi.begin(), f.phi.end());
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

/// Gaussian Frechet distance between the per-frame parameters of two sets of
/// trajectories; every coordinate is standardized with the pooled mean and
/// standard deviation first (constant coordinates are only centered).
inline double trajectory_frechet(std::span<const Trajectory> a, std::span<const Trajectory> b) {
  auto ra = frame_parameters(a), rb = frame_parameters(b);
  if (ra.empty() || rb.empty()) throw Error(ErrorKind::kInvalidArgument, "empty trajectory set");
  const std::size_t d = ra.front().size();
  const double n = static_cast<double>(ra.size() + rb.size());
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0, sq = 0.0;
    for (const auto& r : ra) mean += r[c];
    for (const auto& r : rb) mean += r[c];
    mean /= n;
    for (const auto& r : ra) sq += (r[c] - mean) * (r[c] - mean);
    for (const auto& r : rb) sq += (r[c] - mean) * (r[c] - mean);
    double sd = std::sqrt(sq / n);
    double s = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (auto& r : ra) r[c] = (r[c] - mean) * s;
    for (auto& r : rb) r[c] = (r[c] - mean) * s;
  }
  return frechet_gaussian(ra, rb);
}

}  // namespace scenemotion
