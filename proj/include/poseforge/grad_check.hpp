#pragma once

// Finite-difference smoothness check for scalar losses. Central differences
// at step eps and eps/2 are compared (Richardson agreement); a derivative kink
// at the evaluation point is reported as SingularPoint.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "poseforge/error.hpp"

namespace poseforge {

struct GradCheckOptions {
  /// Deviations are relative to max(|g_eps|, |g_eps/2|, scale_floor * max(1, |f(x)|)).
  double scale_floor = 1e-6;
  /// Optional domain guard; returning true for the point marks it singular.
  std::function<bool(std::span<const double>)> is_singular;
};

struct GradCheckResult {
  double max_deviation = 0.0;
  std::size_t worst_coordinate = 0;
  std::vector<double> gradient;  // central difference at eps/2
};

template <typename Loss>
GradCheckResult grad_check(Loss&& loss, std::vector<double> x, double eps,
                           const GradCheckOptions& opt = {}) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidRange, "eps must be positive");
  if (opt.is_singular && opt.is_singular(x))
    throw Error(ErrorCode::SingularPoint, "domain guard rejected the evaluation point");

  auto eval = [&](const std::vector<double>& p) {
    const double v = loss(std::span<const double>(p));
    if (!std::isfinite(v)) throw Error(ErrorCode::SingularPoint, "loss is not finite near the point");
    return v;
  };
  const double f0 = eval(x);
  const double floor = opt.scale_floor * std::max(1.0, std::abs(f0));

  GradCheckResult res;
  res.gradient.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    auto at = [&](double h) {
      x[i] = xi + h;
      const double v = eval(x);
      x[i] = xi;
      return v;
    };
    const double h = eps, hh = eps / 2.0;
    const double fp = at(h), fm = at(-h), fph = at(hh), fmh = at(-hh);

    // second differences: ~f''h for smooth f, ~constant slope jump at a kink
    const double jump = (fp - 2.0 * f0 + fm) / h;
    const double jump_half = (fph - 2.0 * f0 + fmh) / hh;
    const double g1 = (fp - fm) / (2.0 * h);
    const double g2 = (fph - fmh) / (2.0 * hh);
    const double kink_floor = 1e-6 * std::max({1.0, std::abs(g2), std::abs(f0)});
    if (std::abs(jump_half) > kink_floor && std::abs(jump_half) >= 0.75 * std::abs(jump))
      throw Error(ErrorCode::SingularPoint,
                  "derivative kink along coordinate " + std::to_string(i));

    const double denom = std::max({std::abs(g1), std::abs(g2), floor});
    const double dev = std::abs(g1 - g2) / denom;
    res.gradient[i] = g2;
    if (dev > res.max_deviation) {
      res.max_deviation = dev;
      res.worst_coordinate = i;
    }
  }
  return res;
}

}  // namespace poseforge
