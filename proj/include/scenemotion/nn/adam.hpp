#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scenemotion/core/error.hpp"

namespace scenemotion::nn {

struct AdamState {
  std::vector<Eigen::VectorXd> first_moment;
  std::vector<Eigen::VectorXd> second_moment;
  std::int64_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update, in place. Moment buffers are allocated on
/// the first call and must keep matching the parameter tensors afterwards.
inline void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                      AdamState& state) {
  if (params.size() != grads.size()) throw Error(ErrorKind::kDimension, "adam: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
      state.second_moment.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
    }
  }
  if (state.first_moment.size() != params.size()) throw Error(ErrorKind::kDimension, "adam: state shape mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size() ||
        static_cast<std::size_t>(state.first_moment[t].size()) != params[t].size()) {
      throw Error(ErrorKind::kDimension, "adam: tensor " + std::to_string(t) + " shape mismatch");
    }
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    Eigen::Map<Eigen::VectorXd> p(params[t].data(), static_cast<Eigen::Index>(params[t].size()));
    Eigen::Map<const Eigen::VectorXd> g(grads[t].data(), static_cast<Eigen::Index>(grads[t].size()));
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace scenemotion::nn
