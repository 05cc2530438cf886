#pragma once

// Dataset-level evaluation: load object models and ground truth from a BOP
// tree, match result rows per image and aggregate the metrics report.

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "poseforge/bop_io.hpp"
#include "poseforge/metrics.hpp"
#include "poseforge/ply.hpp"

namespace poseforge {

struct ImageKey {
  int scene_id = 0;
  int im_id = 0;
  auto operator<=>(const ImageKey&) const = default;
};

struct GroundTruthImage {
  CameraIntrinsics intrinsics;
  std::vector<GroundTruthInstance> instances;
};

using DatasetGroundTruth = std::map<ImageKey, GroundTruthImage>;

/// Dataset root (camera.json + train/), a split directory, or one scene directory.
struct DatasetLocation {
  std::filesystem::path scenes;  // passed to bop::list_scenes
  std::optional<std::filesystem::path> camera_json;
  std::optional<std::filesystem::path> models;
};

inline DatasetLocation locate_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  DatasetLocation loc;
  loc.scenes = dir;
  if (fs::exists(dir / "camera.json") && fs::is_directory(dir / "train")) loc.scenes = dir / "train";
  for (fs::path p = fs::absolute(loc.scenes).lexically_normal(); !p.empty(); p = p.parent_path()) {
    if (!loc.camera_json && fs::exists(p / "camera.json")) loc.camera_json = p / "camera.json";
    if (!loc.models && fs::is_directory(p / "models")) loc.models = p / "models";
    if (loc.camera_json && loc.models) break;
    if (p == p.parent_path()) break;
  }
  return loc;
}

inline DatasetGroundTruth collect_ground_truth(const std::filesystem::path& dir) {
  const DatasetLocation loc = locate_dataset(dir);
  std::optional<bop::DatasetCamera> dataset_cam;
  if (loc.camera_json) dataset_cam = bop::read_dataset_camera(*loc.camera_json);

  DatasetGroundTruth out;
  for (const auto& [scene_id, scene_dir] : bop::list_scenes(loc.scenes)) {
    const bop::Scene scene = bop::read_scene(scene_dir);
    for (const auto& [im_id, entries] : scene.gt) {
      int w = 0, h = 0;
      if (dataset_cam) {
        w = dataset_cam->intrinsics.width, h = dataset_cam->intrinsics.height;
      } else if (std::filesystem::exists(bop::rgb_path(scene_dir, im_id))) {
        const auto hdr = read_png_header(bop::rgb_path(scene_dir, im_id));
        w = hdr.width, h = hdr.height;
      }
      GroundTruthImage img;
      img.intrinsics = scene.camera.at(im_id).intrinsics(std::max(w, 1), std::max(h, 1));
      for (const auto& e : entries) {
        const Pose p = e.pose();
        require_rotation(p.rotation, "ground-truth cam_R_m2c", bop::kFileRotationTolerance);
        img.instances.push_back(GroundTruthInstance{e.obj_id, p});
      }
      out[ImageKey{scene_id, im_id}] = std::move(img);
    }
  }
  return out;
}

/// Loads every models/obj_NNNNNN.ply; n_points == 0 keeps the raw vertices.
inline ModelLibrary load_model_library(const std::filesystem::path& models_dir,
                                       std::size_t n_points = kDefaultEvalPoints, std::uint64_t seed = 0) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(models_dir)) throw Error(ErrorCode::MissingFile, models_dir.string());
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(models_dir)) {
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("obj_") || entry.path().extension() != ".ply") continue;
    if (auto id = text::parse_int<int>(name.substr(4, name.size() - 8))) files.emplace_back(*id, entry.path());
  }
  std::sort(files.begin(), files.end());
  ModelLibrary lib;
  for (const auto& [id, path] : files) lib.emplace(id, make_object_model(id, load_ply(path), n_points, seed));
  return lib;
}

namespace detail {

// Rotations stored as text carry rounding noise; within file precision they
// are snapped to the nearest rotation, exact ones are kept bit for bit.
inline Mat3 result_rotation(const std::array<double, 9>& r, std::size_t row) {
  Pose p = bop::GtEntry{1, r, {0, 0, 0}}.pose();
  if (is_rotation(p.rotation)) return p.rotation;
  if (!is_rotation(p.rotation, bop::kFileRotationTolerance))
    throw Error(ErrorCode::InvalidRotation, "result row " + std::to_string(row) + ": R is not a rotation");
  Eigen::JacobiSVD<Mat3> svd(p.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Predictions grouped per image; rows for images without ground truth are dropped.
inline std::map<ImageKey, std::vector<ScoredPose>> group_results(const std::vector<bop::ResultRow>& rows,
                                                                 const DatasetGroundTruth& gt) {
  std::map<ImageKey, std::vector<ScoredPose>> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const ImageKey key{r.scene_id, r.im_id};
    if (!gt.contains(key)) continue;
    Pose p;
    p.rotation = detail::result_rotation(r.R, i + 2);  // +1 header, +1 one-based
    p.translation = Vec3(r.t[0], r.t[1], r.t[2]);
    out[key].push_back(ScoredPose{r.obj_id, r.score, p});
  }
  return out;
}

struct EvaluationOptions {
  std::vector<double> thresholds = default_thresholds();
  PoseMetric metric = PoseMetric::AddS;
};

struct Evaluation {
  MetricsReport report;
  std::vector<PoseErrorRecord> records;
};

inline Evaluation evaluate_results(const DatasetGroundTruth& gt, const std::vector<bop::ResultRow>& rows,
                                   const ModelLibrary& models, const EvaluationOptions& opt = {}) {
  validate_thresholds(opt.thresholds);
  const auto preds = group_results(rows, gt);
  Evaluation ev;
  for (const auto& [key, img] : gt) {
    auto it = preds.find(key);
    const std::vector<ScoredPose> none;
    const auto& p = it == preds.end() ? none : it->second;
    auto recs = match_and_score(img.instances, p, models, MatchConfig{opt.metric});
    for (auto& r : recs) {
      r.scene_id = key.scene_id;
      r.im_id = key.im_id;
      ev.records.push_back(r);
    }
  }
  ev.report = aggregate_report(ev.records, 0, opt.thresholds, opt.metric);
  return ev;
}

}  // namespace poseforge
