#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"

namespace scenemotion::nn {

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t coords_per_tensor = 8;  // 0 checks every coordinate
  double denominator_floor = 1e-6;    // relative error uses max(|a|, |n|, floor)
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
};

/// Evaluation of the scalar loss at the current parameters, plus a signature
/// that changes whenever a non-differentiable point (e.g. a relu kink) is
/// crossed. Coordinates whose +h and -h signatures differ are skipped.
struct LossProbe {
  double value = 0.0;
  std::vector<std::uint8_t> signature;
};

/// Central finite differences of `probe` against `analytic`, perturbing the
/// tensors in `params` in place (restored afterwards).
inline GradCheckReport finite_difference_check(std::span<const std::span<double>> params,
                                               std::span<const std::span<const double>> analytic,
                                               const std::function<LossProbe()>& probe,
                                               const GradCheckOptions& opt = {}) {
  if (params.size() != analytic.size()) throw Error(ErrorKind::kDimension, "gradcheck: tensor count mismatch");
  Rng rng(opt.seed);
  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != analytic[t].size()) throw Error(ErrorKind::kDimension, "gradcheck: tensor shape mismatch");
    const std::size_t size = params[t].size();
    std::vector<std::size_t> coords;
    if (opt.coords_per_tensor == 0 || opt.coords_per_tensor >= size) {
      for (std::size_t i = 0; i < size; ++i) coords.push_back(i);
    } else {
      for (std::size_t i = 0; i < opt.coords_per_tensor; ++i) coords.push_back(static_cast<std::size_t>(rng.below(size)));
    }
    for (std::size_t i : coords) {
      double& p = params[t][i];
      const double saved = p;
      p = saved + opt.step;
      LossProbe plus = probe();
      p = saved - opt.step;
      LossProbe minus = probe();
      p = saved;
      if (plus.signature != minus.signature) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * opt.step);
      const double a = analytic[t][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opt.denominator_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      report.max_relative_error = std::max(report.max_relative_error, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace scenemotion::nn
