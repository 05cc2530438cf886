#pragma once

// Reference (non-autodiff) implementations of the pose-head training losses:
// ADD(-S) point loss, OKS center loss, ARD depth loss, L1 6D-rotation loss
// and their weighted sum. Intended for validating a training stack.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "poseforge/detection.hpp"
#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/mesh.hpp"

namespace poseforge {

struct AddsLossOptions {
  bool symmetric = false;
  /// Divide by d_m² (ambiguous norm subscript in the loss definition). Off by default.
  bool normalize_by_diameter = false;
  double diameter = 0.0;  // mm, required when normalize_by_diameter
};

/// Mean squared point distance, asymmetric (corresponding points) or
/// symmetric (closest ground-truth point, exhaustive search).
inline double loss_adds(const Pose& pred, const Pose& gt, const PointSet& pts,
                        const AddsLossOptions& opt = {}) {
  if (pts.empty()) throw Error(ErrorCode::EmptyPointSet, "loss needs at least one model point");
  if (opt.normalize_by_diameter && !(opt.diameter > 0.0))
    throw Error(ErrorCode::NonPositiveDiameter, "diameter normalization needs diameter > 0");

  double sum = 0.0;
  if (!opt.symmetric) {
    for (const auto& x : pts.points) sum += (pred.apply(x) - gt.apply(x)).squaredNorm();
  } else {
    std::vector<Vec3> target;
    target.reserve(pts.size());
    for (const auto& x : pts.points) target.push_back(gt.apply(x));
    for (const auto& x : pts.points) {
      const Vec3 p = pred.apply(x);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : target) best = std::min(best, (p - y).squaredNorm());
      sum += best;
    }
  }
  double loss = sum / static_cast<double>(pts.size());
  if (opt.normalize_by_diameter) loss /= opt.diameter * opt.diameter;
  return loss;
}

/// For the symmetric loss: index of the ground-truth point each predicted point
/// is matched to. A change of assignment marks a non-smooth point of the loss.
inline std::vector<std::size_t> symmetric_assignment(const Pose& pred, const Pose& gt,
                                                     const PointSet& pts) {
  std::vector<Vec3> target;
  target.reserve(pts.size());
  for (const auto& x : pts.points) target.push_back(gt.apply(x));
  std::vector<std::size_t> out;
  out.reserve(pts.size());
  for (const auto& x : pts.points) {
    const Vec3 p = pred.apply(x);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double d = (p - target[j]).squaredNorm();
      if (d < best) best = d, arg = j;
    }
    out.push_back(arg);
  }
  return out;
}

inline constexpr double kDefaultOksK = 0.1;

struct OksContext {
  double bbox_area = 1.0;  // px², object box area; s = sqrt(bbox_area)
  double k = kDefaultOksK;

  void validate() const {
    if (!(bbox_area > 0.0) || !std::isfinite(bbox_area))
      throw Error(ErrorCode::InvalidContext, "bbox_area must be positive");
    if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorCode::InvalidContext, "k must be positive");
  }
};

/// 1 − exp(−d² / (2 s² k²)), d = center distance in px, s = sqrt(box area).
inline double loss_oks(const Vec2& center_pred, const Vec2& center_gt, const OksContext& ctx) {
  ctx.validate();
  const double d2 = (center_pred - center_gt).squaredNorm();
  const double s2 = ctx.bbox_area;
  return 1.0 - std::exp(-d2 / (2.0 * s2 * ctx.k * ctx.k));
}

enum class ArdMode {
  Absolute,  // |1 − tzp/tzg|
  Signed,    // 1 − tzp/tzg, negative for over-predicted depth
};

inline double loss_ard(double tz_pred, double tz_gt, ArdMode mode = ArdMode::Absolute) {
  if (!(tz_gt > 0.0))
    throw Error(ErrorCode::NonPositiveGroundTruthDepth, "tz_gt=" + std::to_string(tz_gt));
  const double v = 1.0 - tz_pred / tz_gt;
  return mode == ArdMode::Absolute ? std::abs(v) : v;
}

/// L1 distance between two 6D rotation encodings.
inline double loss_rot(const Rot6D& pred, const Rot6D& gt) {
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) s += std::abs(pred[i] - gt[i]);
  return s;
}

struct PoseLossBreakdown {
  // unweighted component losses
  double adds = 0.0;
  double rot = 0.0;
  double oks = 0.0;
  double ard = 0.0;
  // weighted contributions; they sum to total
  double adds_term = 0.0;
  double rot_term = 0.0;
  double oks_term = 0.0;
  double ard_term = 0.0;
  double total = 0.0;
};

struct PoseLossOptions {
  AddsLossOptions adds;  // adds.symmetric selects L_sym
  ArdMode ard_mode = ArdMode::Absolute;
};

/// Weighted sum of the four losses for one predicted instance. The predicted
/// pose is decoded from the 6D rotation, projected center and depth.
inline PoseLossBreakdown loss_pose(const PoseParams& pred, const Pose& gt, const PointSet& pts,
                                   const CameraIntrinsics& k, const OksContext& ctx,
                                   const LossWeights& w = {}, const PoseLossOptions& opt = {}) {
  const Pose pred_pose{rot6d_to_matrix(pred.r6), recover_translation(pred.center, pred.tz, k)};
  const Rot6D gt_r6 = matrix_to_rot6d(gt.rotation);
  const Vec2 gt_center = project(gt.translation, k);

  PoseLossBreakdown b;
  b.adds = loss_adds(pred_pose, gt, pts, opt.adds);
  b.rot = loss_rot(pred.r6, gt_r6);
  b.oks = loss_oks(pred.center, gt_center, ctx);
  b.ard = loss_ard(pred.tz, gt.translation.z(), opt.ard_mode);
  b.adds_term = w.lambda_adds * b.adds;
  b.rot_term = w.lambda_rot * b.rot;
  b.oks_term = w.lambda_oks * b.oks;
  b.ard_term = w.lambda_ard * b.ard;
  b.total = b.adds_term + b.rot_term + b.oks_term + b.ard_term;
  return b;
}

/// Exact encoding of a pose into pose-head parameters.
inline PoseParams encode_pose(const Pose& pose, const CameraIntrinsics& k) {
  return PoseParams{matrix_to_rot6d(pose.rotation), project(pose.translation, k), pose.translation.z()};
}

}  // namespace poseforge
