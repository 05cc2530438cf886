#pragma once

// ADD / ADD-S pose-correctness metrics, rotation and translation errors, and
// aggregation into the ADD-S_0pX_avg report layout.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "poseforge/detection.hpp"
#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/mesh.hpp"
#include "poseforge/nn_index.hpp"
#include "poseforge/text.hpp"

namespace poseforge {

/// Per-point distance used by the metrics. Euclidean is the metric proper;
/// Squared mirrors the training loss and exists only for parity experiments.
enum class PointDistance { Euclidean, Squared };

namespace detail {
inline double apply_distance(double d, PointDistance kind) {
  return kind == PointDistance::Squared ? d * d : d;
}
inline void require_points(const PointSet& pts) {
  if (pts.empty()) throw Error(ErrorCode::EmptyPointSet, "metric needs at least one model point");
}
}  // namespace detail

/// Mean distance between corresponding model points under both poses (mm).
inline double add_error(const Pose& pred, const Pose& gt, const PointSet& pts,
                        PointDistance kind = PointDistance::Euclidean) {
  detail::require_points(pts);
  double sum = 0.0;
  for (const auto& x : pts.points) {
    const Vec3 a = pred.apply(x);
    const Vec3 b = gt.apply(x);
    sum += detail::apply_distance(detail::point_distance(a, b), kind);
  }
  return sum / static_cast<double>(pts.size());
}

/// Index over the ground-truth-transformed model points {R_g x + t_g}.
inline NNIndex transformed_index(const Pose& gt, const PointSet& pts) {
  detail::require_points(pts);
  std::vector<Vec3> moved;
  moved.reserve(pts.size());
  for (const auto& x : pts.points) moved.push_back(gt.apply(x));
  return NNIndex(std::move(moved));
}

/// Mean distance from each predicted-pose point to the closest ground-truth-pose point.
/// `gt_index` must index gt.apply(x) for every x in pts.
inline double adds_error(const Pose& pred, const Pose& /*gt*/, const PointSet& pts,
                         const NNIndex& gt_index, PointDistance kind = PointDistance::Euclidean) {
  detail::require_points(pts);
  double sum = 0.0;
  for (const auto& x : pts.points)
    sum += detail::apply_distance(gt_index.nearest(pred.apply(x)).distance, kind);
  return sum / static_cast<double>(pts.size());
}

inline double adds_error(const Pose& pred, const Pose& gt, const PointSet& pts,
                         PointDistance kind = PointDistance::Euclidean) {
  return adds_error(pred, gt, pts, transformed_index(gt, pts), kind);
}

/// ADD-S against an index over the untransformed model points. Queries are
/// mapped into the model frame, so one index serves every ground-truth pose.
inline double adds_error_model_frame(const Pose& pred, const Pose& gt, const PointSet& pts,
                                     const NNIndex& model_index,
                                     PointDistance kind = PointDistance::Euclidean) {
  detail::require_points(pts);
  if (pred.rotation == gt.rotation && pred.translation == gt.translation) return 0.0;
  const Pose to_model = gt.inverse();
  const Pose pred_in_model = to_model.compose(pred);
  double sum = 0.0;
  for (const auto& x : pts.points)
    sum += detail::apply_distance(model_index.nearest(pred_in_model.apply(x)).distance, kind);
  return sum / static_cast<double>(pts.size());
}

/// Strict: error must be below fraction * diameter.
inline bool pose_correct(double error, double diameter, double fraction) {
  if (!(diameter > 0.0))
    throw Error(ErrorCode::NonPositiveDiameter, "diameter=" + std::to_string(diameter));
  if (!(fraction > 0.0)) throw Error(ErrorCode::InvalidThreshold, "fraction must be positive");
  return error < fraction * diameter;
}

/// Geodesic angle between two rotations in degrees, arccos((tr(RᵀR̂) − 1)/2).
/// Near 0° and 180° the same angle comes from atan2(sin, cos), since arccos
/// loses about half the digits there.
inline double rotation_error(const Mat3& r, const Mat3& r_hat) {
  require_rotation(r, "R");
  require_rotation(r_hat, "R_hat");
  const Mat3 m = r.transpose() * r_hat;
  const double c = (m.trace() - 1.0) / 2.0;
  if (std::abs(c) < 0.9) return rad2deg(std::acos(c));
  const double s = 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm();
  return rad2deg(std::atan2(s, std::clamp(c, -1.0, 1.0)));
}

inline double translation_error(const Vec3& t, const Vec3& t_hat) {
  return detail::point_distance(t, t_hat);
}

/// Evaluation-ready object model: mesh-derived diameter, evaluation points
/// and a model-frame nearest-neighbour index over those points.
struct ObjectModel {
  int obj_id = 0;
  double diameter = 0.0;
  PointSet points;
  NNIndex index;

  ObjectModel(int id, const Mesh& mesh, PointSet eval_points)
      : obj_id(id), diameter(mesh_diameter(mesh)), points(std::move(eval_points)), index(points) {}
};

/// n_points == 0 selects the raw mesh vertices.
inline ObjectModel make_object_model(int obj_id, const Mesh& mesh,
                                     std::size_t n_points = kDefaultEvalPoints,
                                     std::uint64_t seed = 0) {
  PointSet pts = n_points == 0 ? mesh.vertex_points() : sample_points(mesh, n_points, seed);
  return ObjectModel(obj_id, mesh, std::move(pts));
}

using ModelLibrary = std::map<int, ObjectModel>;

struct GroundTruthInstance {
  int obj_id = 0;
  Pose pose;
};

struct ScoredPose {
  int obj_id = 0;
  double score = 0.0;
  Pose pose;
};

enum class PoseMetric { AddS, Add };

struct PoseErrorRecord {
  int scene_id = 0;
  int im_id = 0;
  int obj_id = 0;
  std::size_t gt_index = 0;
  double adds_error = std::numeric_limits<double>::infinity();  // mm, ADD or ADD-S per config
  double rotation_error = 180.0;                                  // degrees
  double translation_error = std::numeric_limits<double>::infinity();  // mm
  double diameter = 0.0;                                          // mm
  double score = 0.0;
  bool matched = false;
};

struct MatchConfig {
  PoseMetric metric = PoseMetric::AddS;
};

namespace detail {
inline const ObjectModel& find_model(const ModelLibrary& models, int obj_id) {
  auto it = models.find(obj_id);
  if (it == models.end())
    throw Error(ErrorCode::UnknownObjectId, "no model for obj_id " + std::to_string(obj_id));
  return it->second;
}
}  // namespace detail

inline double pose_metric_error(const Pose& pred, const Pose& gt, const ObjectModel& model,
                                PoseMetric metric) {
  return metric == PoseMetric::AddS ? adds_error_model_frame(pred, gt, model.points, model.index)
                                    : add_error(pred, gt, model.points);
}

/// Greedy per-class matching for one image. Predictions are visited by
/// descending score (input order breaks ties); each claims the unclaimed
/// ground truth of its class with the lowest metric error. Returns one record
/// per ground-truth instance in ground-truth order; unmatched ones have
/// matched == false.
inline std::vector<PoseErrorRecord> match_and_score(std::span<const GroundTruthInstance> gt,
                                                    std::span<const ScoredPose> preds,
                                                    const ModelLibrary& models,
                                                    const MatchConfig& config = {}) {
  std::vector<PoseErrorRecord> records(gt.size());
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const auto& model = detail::find_model(models, gt[g].obj_id);
    records[g].obj_id = gt[g].obj_id;
    records[g].gt_index = g;
    records[g].diameter = model.diameter;
  }
  for (const auto& p : preds) detail::find_model(models, p.obj_id);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<char> claimed(gt.size(), 0);
  for (std::size_t pi : order) {
    const auto& p = preds[pi];
    const auto& model = detail::find_model(models, p.obj_id);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_g = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (claimed[g] || gt[g].obj_id != p.obj_id) continue;
      const double err = pose_metric_error(p.pose, gt[g].pose, model, config.metric);
      if (err < best || best_g == gt.size()) best = err, best_g = g;
    }
    if (best_g == gt.size()) continue;
    claimed[best_g] = 1;
    auto& rec = records[best_g];
    rec.matched = true;
    rec.adds_error = best;
    rec.score = p.score;
    rec.rotation_error = rotation_error(gt[best_g].pose.rotation, p.pose.rotation);
    rec.translation_error = translation_error(gt[best_g].pose.translation, p.pose.translation);
  }
  return records;
}

inline std::vector<PoseErrorRecord> match_and_score(std::span<const GroundTruthInstance> gt,
                                                    std::span<const Detection> dets,
                                                    const ModelLibrary& models,
                                                    const MatchConfig& config = {}) {
  std::vector<ScoredPose> preds;
  preds.reserve(dets.size());
  for (const auto& d : dets) {
    if (!d.decoded) throw Error(ErrorCode::InvalidConfig, "detection has no decoded pose");
    preds.push_back(ScoredPose{d.obj_id, d.score, *d.decoded});
  }
  return match_and_score(gt, std::span<const ScoredPose>(preds), models, config);
}

inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> t{0.1, 0.2, 0.3, 0.4, 0.5};
  return t;
}

struct MetricsReport {
  std::string metric_label = "ADD-S";
  std::vector<double> thresholds;  // fractions of the object diameter
  std::vector<double> rates;       // fraction of instances correct at each threshold
  double rotation_error_avg = 0.0;     // degrees, matched instances only
  double translation_error_avg = 0.0;  // mm, matched instances only
  std::size_t instance_count = 0;      // ground-truth instances incl. misses
  std::size_t matched_count = 0;
  std::size_t unmatched_gt_count = 0;

  /// "ADD-S_0p1_avg" style row name for threshold i.
  std::string rate_name(std::size_t i) const {
    std::string f = text::format_double(thresholds[i]);
    std::replace(f.begin(), f.end(), '.', 'p');
    return metric_label + "_" + f + "_avg";
  }
};

inline void validate_thresholds(std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] <= 1.0))
      throw Error(ErrorCode::InvalidThreshold, "threshold fractions must lie in (0,1]");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw Error(ErrorCode::InvalidThreshold, "threshold fractions must be strictly increasing");
  }
}

/// Rates = correct / (records + extra_misses); unmatched records count as misses.
inline MetricsReport aggregate_report(std::span<const PoseErrorRecord> records,
                                      std::size_t extra_misses = 0,
                                      std::span<const double> thresholds = default_thresholds(),
                                      PoseMetric metric = PoseMetric::AddS) {
  validate_thresholds(thresholds);
  MetricsReport rep;
  rep.metric_label = metric == PoseMetric::AddS ? "ADD-S" : "ADD";
  rep.thresholds.assign(thresholds.begin(), thresholds.end());
  rep.rates.assign(thresholds.size(), 0.0);
  rep.instance_count = records.size() + extra_misses;
  rep.unmatched_gt_count = extra_misses;

  std::vector<std::size_t> correct(thresholds.size(), 0);
  double rot_sum = 0.0, trans_sum = 0.0;
  for (const auto& r : records) {
    if (!r.matched) {
      ++rep.unmatched_gt_count;
      continue;
    }
    ++rep.matched_count;
    rot_sum += r.rotation_error;
    trans_sum += r.translation_error;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (pose_correct(r.adds_error, r.diameter, thresholds[i])) ++correct[i];
  }
  if (rep.instance_count > 0)
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      rep.rates[i] = static_cast<double>(correct[i]) / static_cast<double>(rep.instance_count);
  if (rep.matched_count > 0) {
    rep.rotation_error_avg = rot_sum / static_cast<double>(rep.matched_count);
    rep.translation_error_avg = trans_sum / static_cast<double>(rep.matched_count);
  }
  return rep;
}

}  // namespace poseforge
