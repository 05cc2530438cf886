#pragma once

// Finite-difference self-test of the training losses over seeded random
// configurations. Points where a loss is not differentiable (L1 kinks,
// nearest-neighbour reassignment) are detected and resampled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poseforge/geometry.hpp"
#include "poseforge/grad_check.hpp"
#include "poseforge/losses.hpp"
#include "poseforge/random.hpp"

namespace poseforge {

struct SelfTestEntry {
  std::string name;
  std::size_t trials = 0;
  std::size_t resampled = 0;  // configurations rejected as singular
  double max_deviation = 0.0;
  bool zero_at_ground_truth = false;
  bool passed = false;
};

struct SelfTestOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  double eps = 1e-4;
  double tolerance = 1e-4;
  std::size_t points = 64;
  std::size_t max_resamples = 10000;
};

namespace detail::selftest {

inline Pose random_pose(Rng& rng) {
  return Pose{random_rotation(rng), Vec3(uniform(rng, -100, 100), uniform(rng, -100, 100), uniform(rng, 500, 1000))};
}

inline Pose perturb(const Pose& p, Rng& rng) {
  const Vec3 axis = Vec3(gaussian(rng), gaussian(rng), gaussian(rng)).normalized();
  const Mat3 dr = Eigen::AngleAxisd(deg2rad(uniform(rng, 0.5, 30.0)), axis).toRotationMatrix();
  return Pose{dr * p.rotation, p.translation + Vec3(uniform(rng, -20, 20), uniform(rng, -20, 20), uniform(rng, -20, 20))};
}

inline PointSet random_points(Rng& rng, std::size_t n) {
  PointSet pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.points.emplace_back(uniform(rng, -40, 40), uniform(rng, -30, 30), uniform(rng, -20, 20));
  return pts;
}

inline std::vector<double> pose_vector(const Pose& p) {
  const Rot6D r = matrix_to_rot6d(p.rotation);
  return {r[0], r[1], r[2], r[3], r[4], r[5], p.translation.x(), p.translation.y(), p.translation.z()};
}

inline Pose vector_pose(std::span<const double> x) {
  Rot6D r;
  std::copy(x.begin(), x.begin() + 6, r.r.begin());
  return Pose{rot6d_to_matrix(r), Vec3(x[6], x[7], x[8])};
}

template <typename MakeCase>
SelfTestEntry run(const std::string& name, const SelfTestOptions& opt, Rng& rng, MakeCase&& make_case) {
  SelfTestEntry e;
  e.name = name;
  e.zero_at_ground_truth = true;
  while (e.trials < opt.trials) {
    if (e.resampled > opt.max_resamples) break;
    auto c = make_case(rng);
    e.zero_at_ground_truth = e.zero_at_ground_truth && c.loss_at_gt == 0.0;
    try {
      const auto r = grad_check(c.loss, c.x, opt.eps, c.options);
      e.max_deviation = std::max(e.max_deviation, r.max_deviation);
      ++e.trials;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::SingularPoint) throw;
      ++e.resampled;
    }
  }
  e.passed = e.trials == opt.trials && e.max_deviation <= opt.tolerance && e.zero_at_ground_truth;
  return e;
}

template <typename F>
struct Case {
  F loss;
  std::vector<double> x;
  GradCheckOptions options;
  double loss_at_gt = 0.0;
};

template <typename F>
Case<F> make(F f, std::vector<double> x, double at_gt, GradCheckOptions o = {}) {
  return Case<F>{std::move(f), std::move(x), std::move(o), at_gt};
}

}  // namespace detail::selftest

inline std::vector<SelfTestEntry> run_loss_selftest(const SelfTestOptions& opt = {}) {
  namespace st = detail::selftest;
  std::vector<SelfTestEntry> out;

  for (bool sym : {false, true}) {
    Rng rng = derive_stream(opt.seed, {sym ? 2u : 1u});
    out.push_back(st::run(sym ? "loss_adds (symmetric)" : "loss_adds (asymmetric)", opt, rng, [&](Rng& r) {
      const PointSet pts = st::random_points(r, opt.points);
      const Pose gt = st::random_pose(r);
      const Pose pred = st::perturb(gt, r);
      const AddsLossOptions lo{sym, false, 0.0};
      GradCheckOptions go;
      if (sym) {
        go.is_singular = [pts, gt, eps = opt.eps](std::span<const double> x) {
          std::vector<double> p(x.begin(), x.end());
          const auto base = symmetric_assignment(st::vector_pose(p), gt, pts);
          for (std::size_t i = 0; i < p.size(); ++i)
            for (double h : {-eps, eps}) {
              std::vector<double> q = p;
              q[i] += h;
              if (symmetric_assignment(st::vector_pose(q), gt, pts) != base) return true;
            }
          return false;
        };
      }
      return st::make([pts, gt, lo](std::span<const double> x) { return loss_adds(st::vector_pose(x), gt, pts, lo); },
                      st::pose_vector(pred), loss_adds(gt, gt, pts, lo), std::move(go));
    }));
  }

  {
    Rng rng = derive_stream(opt.seed, {3});
    out.push_back(st::run("loss_oks", opt, rng, [&](Rng& r) {
      const OksContext ctx{uniform(r, 400.0, 40000.0), kDefaultOksK};
      const Vec2 gt(uniform(r, 0, 640), uniform(r, 0, 480));
      const double s = std::sqrt(ctx.bbox_area);
      const Vec2 pred = gt + Vec2(uniform(r, -0.3, 0.3) * s, uniform(r, -0.3, 0.3) * s);
      return st::make([gt, ctx](std::span<const double> x) { return loss_oks(Vec2(x[0], x[1]), gt, ctx); },
                      std::vector<double>{pred.x(), pred.y()}, loss_oks(gt, gt, ctx));
    }));
  }

  {
    Rng rng = derive_stream(opt.seed, {4});
    out.push_back(st::run("loss_rot", opt, rng, [&](Rng& r) {
      const Rot6D gt = matrix_to_rot6d(random_rotation(r));
      const Rot6D pred = matrix_to_rot6d(random_rotation(r));
      GradCheckOptions go;
      // |.| has a kink wherever a component matches the target
      go.is_singular = [gt, eps = opt.eps](std::span<const double> x) {
        for (std::size_t i = 0; i < 6; ++i)
          if (std::abs(x[i] - gt[i]) <= 2.0 * eps) return true;
        return false;
      };
      return st::make(
          [gt](std::span<const double> x) {
            Rot6D p;
            std::copy(x.begin(), x.end(), p.r.begin());
            return loss_rot(p, gt);
          },
          std::vector<double>(pred.r.begin(), pred.r.end()), loss_rot(gt, gt), std::move(go));
    }));
  }

  {
    Rng rng = derive_stream(opt.seed, {5});
    out.push_back(st::run("loss_ard", opt, rng, [&](Rng& r) {
      const double tz_gt = uniform(r, 300, 1500);
      const double tz_pred = tz_gt * uniform(r, 0.7, 1.3);
      GradCheckOptions go;
      go.is_singular = [tz_gt, eps = opt.eps](std::span<const double> x) { return std::abs(x[0] - tz_gt) <= 2.0 * eps; };
      return st::make([tz_gt](std::span<const double> x) { return loss_ard(x[0], tz_gt); },
                      std::vector<double>{tz_pred}, loss_ard(tz_gt, tz_gt), std::move(go));
    }));
  }
  return out;
}

}  // namespace poseforge
