#pragma once

// Pose-head decoding, box IoU, greedy NMS and the timed evaluation harness
// (forward-analog / NMS / total breakdown).

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "poseforge/detection.hpp"
#include "poseforge/evaluate.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/losses.hpp"
#include "poseforge/metrics.hpp"

namespace poseforge {

inline Pose decode(const PoseParams& params, const CameraIntrinsics& k) {
  return Pose{rot6d_to_matrix(params.r6), recover_translation(params.center, params.tz, k)};
}

inline Pose decode(const Detection& det, const CameraIntrinsics& k) { return decode(det.params, k); }

inline double iou(const BBox& a, const BBox& b) {
  if (!a.valid() || !b.valid()) throw Error(ErrorCode::InvalidBox, "box has min > max or non-finite corners");
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) {
    const bool same = a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max && a.y_max == b.y_max;
    return same ? 1.0 : 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline constexpr double kDefaultNmsIou = 0.65;

/// Greedy NMS: highest score first (input order breaks ties); a detection is
/// kept iff its IoU with every kept detection (of its class when per_class)
/// is <= iou_threshold. Output is in kept order.
inline std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold = kDefaultNmsIou,
                                  bool per_class = true) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw Error(ErrorCode::InvalidThreshold, "NMS IoU threshold must lie in (0,1]");
  for (const auto& d : dets)
    if (!d.bbox.valid()) throw Error(ErrorCode::InvalidBox, "detection box is invalid");
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const auto& d = dets[i];
    const bool keep = std::all_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return (per_class && k.obj_id != d.obj_id) || iou(k.bbox, d.bbox) <= iou_threshold;
    });
    if (keep) kept.push_back(d);
  }
  return kept;
}

/// Box of the model points projected under pose; points behind the camera are ignored.
inline BBox projected_bbox(const Pose& pose, const PointSet& pts, const CameraIntrinsics& k) {
  BBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (const auto& x : pts.points) {
    const Vec3 c = pose.apply(x);
    if (c.z() <= kMinProjectableDepth) continue;
    const Vec2 px = project(c, k);
    b.x_min = std::min(b.x_min, px.x()), b.y_min = std::min(b.y_min, px.y());
    b.x_max = std::max(b.x_max, px.x()), b.y_max = std::max(b.y_max, px.y());
    any = true;
  }
  return any ? b : BBox{};
}

struct TimingReport {
  double avg_forward_ms = 0.0;
  double avg_nms_ms = 0.0;
  double avg_total_ms = 0.0;
  std::size_t count = 0;  // images
};

struct StageHooks {
  std::function<void(std::vector<Detection>&)> after_forward;
  std::function<void(std::vector<Detection>&)> after_nms;
};

struct TimedOptions {
  EvaluationOptions evaluation;
  double nms_iou = kDefaultNmsIou;
  bool per_class = true;
};

struct TimedEvaluation {
  Evaluation evaluation;
  TimingReport timing;
};

/// Per image: "forward" = encode each result into pose-head parameters,
/// decode it back and build its detection box; then NMS; then matching.
/// "total" spans all three. Rows whose pose lies behind the camera are dropped.
inline TimedEvaluation timed_evaluate(const DatasetGroundTruth& gt, const std::vector<bop::ResultRow>& rows,
                                      const ModelLibrary& models, const TimedOptions& opt = {},
                                      const StageHooks& hooks = {}) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  validate_thresholds(opt.evaluation.thresholds);
  if (!(opt.nms_iou > 0.0 && opt.nms_iou <= 1.0))
    throw Error(ErrorCode::InvalidThreshold, "NMS IoU threshold must lie in (0,1]");

  const auto preds = group_results(rows, gt);
  TimedEvaluation out;
  double fwd_sum = 0.0, nms_sum = 0.0, total_sum = 0.0;
  for (const auto& [key, img] : gt) {
    auto it = preds.find(key);
    const std::vector<ScoredPose> none;
    const auto& p = it == preds.end() ? none : it->second;

    const auto t0 = clock::now();
    std::vector<Detection> dets;
    dets.reserve(p.size());
    for (const auto& sp : p) {
      if (!(sp.pose.translation.z() > kMinProjectableDepth)) continue;
      Detection d;
      d.obj_id = sp.obj_id;
      d.score = sp.score;
      d.params = encode_pose(sp.pose, img.intrinsics);
      d.decoded = decode(d, img.intrinsics);
      d.bbox = projected_bbox(*d.decoded, detail::find_model(models, sp.obj_id).points, img.intrinsics);
      dets.push_back(std::move(d));
    }
    if (hooks.after_forward) hooks.after_forward(dets);
    const auto t1 = clock::now();
    std::vector<Detection> kept = nms(dets, opt.nms_iou, opt.per_class);
    if (hooks.after_nms) hooks.after_nms(kept);
    const auto t2 = clock::now();
    auto recs = match_and_score(img.instances, std::span<const Detection>(kept), models,
                                MatchConfig{opt.evaluation.metric});
    const auto t3 = clock::now();

    for (auto& r : recs) {
      r.scene_id = key.scene_id;
      r.im_id = key.im_id;
      out.evaluation.records.push_back(r);
    }
    fwd_sum += ms(t1 - t0);
    nms_sum += ms(t2 - t1);
    total_sum += ms(t3 - t0);
  }
  out.evaluation.report =
      aggregate_report(out.evaluation.records, 0, opt.evaluation.thresholds, opt.evaluation.metric);
  out.timing.count = gt.size();
  if (!gt.empty()) {
    const double n = static_cast<double>(gt.size());
    out.timing.avg_forward_ms = fwd_sum / n;
    out.timing.avg_nms_ms = nms_sum / n;
    out.timing.avg_total_ms = total_sum / n;
  }
  return out;
}

}  // namespace poseforge
