#pragma once

// Synthetic tabletop scenes: objects rest on a plane (bounding spheres touching
// it, rejection-sampled so spheres never interpenetrate), look-at cameras on a
// hemisphere shell, z-buffer rendering and BOP output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "poseforge/bop_io.hpp"
#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/image.hpp"
#include "poseforge/mesh.hpp"
#include "poseforge/ply.hpp"
#include "poseforge/random.hpp"
#include "poseforge/raster.hpp"

namespace poseforge {

// ------------------------------------------------------------ builtin meshes

namespace builtin {

/// Closed surface of revolution about z from a (radius, z) profile whose first
/// and last radii are zero (the poles).
inline Mesh revolve(const std::vector<std::pair<double, double>>& profile, int segments) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  const int rings = static_cast<int>(profile.size()) - 2;
  v.emplace_back(0.0, 0.0, profile.front().second);
  for (int i = 1; i <= rings; ++i) {
    const auto [r, z] = profile[i];
    for (int j = 0; j < segments; ++j) {
      const double a = 2.0 * std::numbers::pi * j / segments;
      v.emplace_back(r * std::cos(a), r * std::sin(a), z);
    }
  }
  v.emplace_back(0.0, 0.0, profile.back().second);
  const int bottom = static_cast<int>(v.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
  for (int j = 0; j < segments; ++j) f.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      f.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      f.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (int j = 0; j < segments; ++j) f.push_back({bottom, ring(rings, j + 1), ring(rings, j)});
  return Mesh(std::move(v), std::move(f));
}

inline Mesh sphere(double radius = 25.0, int rings = 16, int segments = 32) {
  std::vector<std::pair<double, double>> p;
  for (int i = 0; i <= rings; ++i) {
    const double t = std::numbers::pi * i / rings;
    p.emplace_back(i == 0 || i == rings ? 0.0 : radius * std::sin(t), radius * std::cos(t));
  }
  return revolve(p, segments);
}

/// Conical-ovoid fruit shape, about 40 mm tall, widest above its middle.
inline Mesh strawberry(int rings = 20, int segments = 32) {
  std::vector<std::pair<double, double>> p;
  for (int i = 0; i <= rings; ++i) {
    const double t = static_cast<double>(i) / rings;  // 0 at the calyx, 1 at the tip
    const double r = 15.0 * std::pow(std::sin(std::numbers::pi * t), 0.7) * (1.1 - 0.55 * t);
    p.emplace_back(i == 0 || i == rings ? 0.0 : r, 18.0 - 40.0 * t);
  }
  return revolve(p, segments);
}

inline Mesh cylinder(double radius = 20.0, double height = 50.0, int segments = 32) {
  const double h = height / 2.0;
  return revolve({{0.0, h}, {radius, h}, {radius, -h}, {0.0, -h}}, segments);
}

inline Mesh box(double sx = 40.0, double sy = 30.0, double sz = 20.0) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i)
    v.emplace_back((i & 1 ? 0.5 : -0.5) * sx, (i & 2 ? 0.5 : -0.5) * sy, (i & 4 ? 0.5 : -0.5) * sz);
  std::vector<Face> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                      {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return Mesh(std::move(v), std::move(f));
}

inline constexpr std::string_view kPrefix = "builtin:";

inline bool is_builtin(std::string_view source) { return source.starts_with(kPrefix); }

inline Mesh make(std::string_view source) {
  const std::string_view name = source.substr(kPrefix.size());
  if (name == "strawberry") return strawberry();
  if (name == "sphere") return sphere();
  if (name == "box") return box();
  if (name == "cylinder") return cylinder();
  throw Error(ErrorCode::InvalidConfig, "unknown builtin mesh '" + std::string(source) + "'");
}

}  // namespace builtin

// ------------------------------------------------------------------ config

struct ModelSpec {
  std::string source;  // PLY path or builtin:<name>
  int obj_id = 0;      // unused for distractors
  int count = 1;
};

struct SceneConfig {
  std::vector<ModelSpec> models;
  std::vector<ModelSpec> distractors;
  double plane_mm = 400.0;  // side of the square support plane centred at the world origin
  int cameras = 10;         // per scene
  double radius_min = 450.0;
  double radius_max = 700.0;
  CameraIntrinsics intrinsics{600.0, 600.0, 319.5, 239.5, 640, 480};
  std::uint64_t seed = 0;
  int scenes = 1;
  double depth_scale = bop::kDefaultDepthScale;

  void validate() const {
    intrinsics.validate();
    if (models.empty()) throw Error(ErrorCode::InvalidConfig, "config needs at least one model");
    std::map<int, int> seen;
    for (const auto& m : models) {
      if (m.obj_id < 1) throw Error(ErrorCode::InvalidConfig, "obj_id must be positive");
      if (++seen[m.obj_id] > 1)
        throw Error(ErrorCode::InvalidConfig, "obj_id " + std::to_string(m.obj_id) + " listed twice");
    }
    for (const auto* list : {&models, &distractors})
      for (const auto& m : *list)
        if (m.count < 0) throw Error(ErrorCode::InvalidConfig, "counts must be >= 0");
    if (!(plane_mm > 0.0)) throw Error(ErrorCode::InvalidConfig, "plane_mm must be positive");
    if (cameras < 0 || scenes < 0) throw Error(ErrorCode::InvalidConfig, "camera and scene counts must be >= 0");
    if (!(radius_min > 0.0) || !(radius_max >= radius_min))
      throw Error(ErrorCode::InvalidConfig, "radius_mm must be positive and ordered");
    if (!(depth_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "depth_scale must be positive");
  }
};

namespace detail {

inline const char* kSceneConfigKeys[] = {"models", "distractors", "plane_mm", "cameras", "radius_mm",
                                         "image",  "intrinsics",  "seed",     "scenes",  "depth_scale"};

inline std::vector<ModelSpec> parse_model_list(const nlohmann::json& j, bool distractor,
                                               const std::filesystem::path& base) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "model list must be an array");
  std::vector<ModelSpec> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("path"))
      throw Error(ErrorCode::InvalidConfig, "model entries need a 'path'");
    for (const auto& [k, _] : e.items())
      if (k != "path" && k != "obj_id" && k != "count")
        throw Error(ErrorCode::InvalidConfig, "unknown model key '" + k + "'");
    ModelSpec m;
    m.source = e.at("path").get<std::string>();
    if (!builtin::is_builtin(m.source) && std::filesystem::path(m.source).is_relative())
      m.source = (base / m.source).lexically_normal().string();
    m.count = e.value("count", 1);
    if (!distractor) {
      if (!e.contains("obj_id")) throw Error(ErrorCode::InvalidConfig, "model entries need an 'obj_id'");
      m.obj_id = e.at("obj_id").get<int>();
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace detail

/// Relative model paths resolve against base_dir.
inline SceneConfig parse_scene_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (std::find(std::begin(detail::kSceneConfigKeys), std::end(detail::kSceneConfigKeys), k) ==
        std::end(detail::kSceneConfigKeys))
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + k + "'");

  SceneConfig cfg;
  try {
    if (j.contains("models")) cfg.models = detail::parse_model_list(j["models"], false, base_dir);
    if (j.contains("distractors")) cfg.distractors = detail::parse_model_list(j["distractors"], true, base_dir);
    cfg.plane_mm = j.value("plane_mm", cfg.plane_mm);
    cfg.cameras = j.value("cameras", cfg.cameras);
    if (j.contains("radius_mm")) {
      const auto r = j["radius_mm"].get<std::vector<double>>();
      if (r.size() != 2) throw Error(ErrorCode::InvalidConfig, "radius_mm must be [min, max]");
      cfg.radius_min = r[0], cfg.radius_max = r[1];
    }
    if (j.contains("image")) {
      const auto s = j["image"].get<std::vector<int>>();
      if (s.size() != 2) throw Error(ErrorCode::InvalidConfig, "image must be [width, height]");
      cfg.intrinsics.width = s[0], cfg.intrinsics.height = s[1];
      cfg.intrinsics.cx = (s[0] - 1) / 2.0, cfg.intrinsics.cy = (s[1] - 1) / 2.0;
    }
    if (j.contains("intrinsics")) {
      const auto& in = j["intrinsics"];
      for (const auto& [k, _] : in.items())
        if (k != "fx" && k != "fy" && k != "cx" && k != "cy")
          throw Error(ErrorCode::InvalidConfig, "unknown intrinsics key '" + k + "'");
      cfg.intrinsics.fx = in.value("fx", cfg.intrinsics.fx);
      cfg.intrinsics.fy = in.value("fy", cfg.intrinsics.fy);
      cfg.intrinsics.cx = in.value("cx", cfg.intrinsics.cx);
      cfg.intrinsics.cy = in.value("cy", cfg.intrinsics.cy);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.scenes = j.value("scenes", cfg.scenes);
    cfg.depth_scale = j.value("depth_scale", cfg.depth_scale);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

inline SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

/// Meshes referenced by a config, loaded once and shared by every scene.
struct SceneAssets {
  std::vector<Mesh> models;       // parallel to SceneConfig::models
  std::vector<Mesh> distractors;  // parallel to SceneConfig::distractors

  static SceneAssets load(const SceneConfig& cfg) {
    auto get = [](const ModelSpec& m) {
      return builtin::is_builtin(m.source) ? builtin::make(m.source) : load_ply(m.source);
    };
    SceneAssets a;
    for (const auto& m : cfg.models) a.models.push_back(get(m));
    for (const auto& m : cfg.distractors) a.distractors.push_back(get(m));
    return a;
  }
};

// --------------------------------------------------------------- placement

struct PlacedObject {
  const Mesh* mesh = nullptr;
  int obj_id = 0;  // 0 for distractors
  bool is_distractor = false;
  Pose world;         // model -> world
  double radius = 0;  // bounding sphere about the model origin, mm
};

inline constexpr int kMaxPlacementAttempts = 1000;
inline constexpr int kMaxCameraAttempts = 100;

inline std::vector<PlacedObject> sample_scene(const SceneConfig& cfg, const SceneAssets& assets, Rng& rng) {
  std::vector<PlacedObject> placed;
  auto place = [&](const Mesh& mesh, int obj_id, bool distractor) {
    const double r = mesh.origin_radius();
    const double half = cfg.plane_mm / 2.0 - r;
    if (half < 0.0)
      throw Error(ErrorCode::PlacementFailure, "object bounding sphere is wider than the plane");
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      PlacedObject o{&mesh, obj_id, distractor, {}, r};
      o.world.rotation = random_rotation(rng);
      o.world.translation = Vec3(uniform(rng, -half, half), uniform(rng, -half, half), r);
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](const PlacedObject& p) {
        return (p.world.translation - o.world.translation).norm() >= p.radius + o.radius;
      });
      if (clear) {
        placed.push_back(o);
        return;
      }
    }
    throw Error(ErrorCode::PlacementFailure,
                "no free spot after " + std::to_string(kMaxPlacementAttempts) + " attempts; plane too crowded");
  };
  for (std::size_t i = 0; i < cfg.models.size(); ++i)
    for (int c = 0; c < cfg.models[i].count; ++c) place(assets.models[i], cfg.models[i].obj_id, false);
  for (std::size_t i = 0; i < cfg.distractors.size(); ++i)
    for (int c = 0; c < cfg.distractors[i].count; ++c) place(assets.distractors[i], 0, true);
  return placed;
}

inline std::vector<PlacedObject> sample_scene(const SceneConfig& cfg, const SceneAssets& assets,
                                              std::uint64_t seed) {
  Rng rng(seed);
  return sample_scene(cfg, assets, rng);
}

inline Vec3 scene_centroid(const std::vector<PlacedObject>& objects) {
  Vec3 c = Vec3::Zero();
  for (const auto& o : objects) c += o.world.translation;
  return objects.empty() ? c : Vec3(c / static_cast<double>(objects.size()));
}

// ------------------------------------------------------------------ cameras

/// World -> camera transform of a camera at eye looking at target, OpenCV
/// axes (x right, y down, z forward) with world +z as up.
inline Pose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());
  right.normalize();
  const Vec3 down = forward.cross(right);
  Pose w2c;
  w2c.rotation.row(0) = right.transpose();
  w2c.rotation.row(1) = down.transpose();
  w2c.rotation.row(2) = forward.transpose();
  w2c.translation = -w2c.rotation * eye;
  return w2c;
}

/// Camera centre of a world -> camera transform.
inline Vec3 camera_center(const Pose& w2c) { return -w2c.rotation.transpose() * w2c.translation; }

/// Cameras uniform in the upper hemisphere shell about centroid; each must see
/// every point in must_see in front of it and inside the image.
inline std::vector<Pose> sample_cameras(const SceneConfig& cfg, const Vec3& centroid,
                                        const std::vector<Vec3>& must_see, Rng& rng) {
  if (!(cfg.radius_min > 0.0) || !(cfg.radius_max >= cfg.radius_min))
    throw Error(ErrorCode::InvalidRange, "camera radius range must be positive and ordered");
  const double r3min = std::pow(cfg.radius_min, 3), r3max = std::pow(cfg.radius_max, 3);
  std::vector<Pose> cams;
  for (int c = 0; c < cfg.cameras; ++c) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxCameraAttempts && !ok; ++attempt) {
      double cz;
      do cz = uniform(rng, 0.0, 1.0);
      while (cz == 0.0);
      const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
      const double radius = std::cbrt(uniform(rng, r3min, r3max));
      const Vec3 eye = centroid + radius * Vec3(sz * std::cos(phi), sz * std::sin(phi), cz);
      const Pose w2c = look_at(eye, centroid);
      ok = std::all_of(must_see.begin(), must_see.end(), [&](const Vec3& p) {
        const Vec3 q = w2c.apply(p);
        return q.z() > kNearPlane && cfg.intrinsics.contains(project(q, cfg.intrinsics));
      });
      if (ok) cams.push_back(w2c);
    }
    if (!ok)
      throw Error(ErrorCode::CameraSamplingFailure, "no camera sees every object after " +
                                                        std::to_string(kMaxCameraAttempts) + " attempts");
  }
  return cams;
}

// --------------------------------------------------------------- rendering

struct RenderedView {
  RenderResult render;  // instance ids are 1 + index into the placed-object list
  std::vector<RenderInstance> instances;
};

inline RenderedView render_view(const std::vector<PlacedObject>& objects, const Pose& w2c,
                                const CameraIntrinsics& k) {
  RenderedView v;
  for (std::size_t i = 0; i < objects.size(); ++i)
    v.instances.push_back(RenderInstance{objects[i].mesh, w2c.compose(objects[i].world), static_cast<std::int32_t>(i + 1)});
  v.render = rasterize(v.instances, k);
  return v;
}

namespace detail {

inline std::array<std::uint8_t, 3> palette(std::size_t i) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kColors{{{200, 30, 40},
                                                                       {60, 160, 60},
                                                                       {40, 90, 200},
                                                                       {220, 180, 40},
                                                                       {160, 60, 180},
                                                                       {40, 180, 190},
                                                                       {230, 120, 30},
                                                                       {150, 150, 150}}};
  return kColors[i % kColors.size()];
}

inline constexpr std::uint8_t kBackground = 96;

inline ImageU8 shade_rgb(const RenderedView& v, const std::vector<PlacedObject>& objects) {
  const auto& r = v.render;
  ImageU8 rgb(r.mask.width, r.mask.height, 3, kBackground);
  for (std::size_t i = 0; i < r.mask.data.size(); ++i) {
    const auto id = r.mask.data[i];
    if (!id) continue;
    const auto& o = objects[static_cast<std::size_t>(id - 1)];
    const auto color = palette(o.is_distractor ? 7 - (id % 3) : static_cast<std::size_t>(o.obj_id - 1));
    const double light = 0.25 + 0.75 * r.shading.data[i];
    for (int c = 0; c < 3; ++c) rgb.data[3 * i + c] = static_cast<std::uint8_t>(std::lround(color[c] * light));
  }
  return rgb;
}

}  // namespace detail

/// Annotations and rasters of one view; GT covers visible non-distractors only.
struct AnnotatedView {
  std::vector<bop::GtEntry> gt;
  std::vector<bop::GtInfoEntry> gt_info;
  bop::ImageSet images;
};

inline AnnotatedView annotate_view(const std::vector<PlacedObject>& objects, const Pose& w2c,
                                   const CameraIntrinsics& k, double depth_scale) {
  const RenderedView view = render_view(objects, w2c, k);
  AnnotatedView out;
  out.images.rgb = detail::shade_rgb(view, objects);
  out.images.depth = bop::encode_depth(view.render.depth, depth_scale);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].is_distractor) continue;
    const ImageU8 alone = render_silhouette(view.instances[i], k);
    const ImageU8 visible = instance_mask(view.render.mask, view.instances[i].id);
    const double vf = visibility_fraction(visible, alone);
    if (!(vf > 0.0)) continue;
    out.gt.push_back(bop::GtEntry::from_pose(objects[i].obj_id, view.instances[i].pose));
    bop::GtInfoEntry info;
    info.bbox_obj = mask_bbox(alone);
    info.bbox_visib = mask_bbox(visible);
    info.px_count_all = static_cast<long>(count_nonzero(alone));
    long valid = 0;
    for (std::size_t p = 0; p < alone.data.size(); ++p)
      if (alone.data[p] && out.images.depth.data[p]) ++valid;
    info.px_count_valid = valid;
    info.px_count_visib = static_cast<long>(count_nonzero(visible));
    info.visib_fract = vf;
    out.gt_info.push_back(info);
    out.images.masks.push_back(alone);
    out.images.masks_visib.push_back(visible);
  }
  return out;
}

// ------------------------------------------------------------------ dataset

/// Everything needed to regenerate one scene deterministically.
struct SceneSample {
  std::vector<PlacedObject> objects;
  std::vector<Pose> cameras;  // world -> camera
};

inline SceneSample sample_scene_and_cameras(const SceneConfig& cfg, const SceneAssets& assets, int scene_id) {
  Rng place_rng = derive_stream(cfg.seed, {static_cast<std::uint64_t>(scene_id), 0});
  Rng cam_rng = derive_stream(cfg.seed, {static_cast<std::uint64_t>(scene_id), 1});
  SceneSample s;
  s.objects = sample_scene(cfg, assets, place_rng);
  std::vector<Vec3> centers;
  for (const auto& o : s.objects) centers.push_back(o.world.translation);
  s.cameras = sample_cameras(cfg, scene_centroid(s.objects), centers, cam_rng);
  return s;
}

struct GenerateSummary {
  int scenes = 0;
  int images = 0;
  std::size_t gt_instances = 0;
};

inline std::filesystem::path split_dir(const std::filesystem::path& root) { return root / "train"; }

inline std::size_t generate_scene(const SceneConfig& cfg, const SceneAssets& assets, int scene_id,
                                  const std::filesystem::path& scene_dir) {
  const SceneSample s = sample_scene_and_cameras(cfg, assets, scene_id);
  bop::Scene scene;
  std::map<int, bop::ImageSet> images;
  std::size_t n_gt = 0;
  for (std::size_t c = 0; c < s.cameras.size(); ++c) {
    const int im_id = static_cast<int>(c);
    AnnotatedView v = annotate_view(s.objects, s.cameras[c], cfg.intrinsics, cfg.depth_scale);
    bop::CameraEntry cam;
    cam.cam_K = cfg.intrinsics.cam_K();
    cam.depth_scale = cfg.depth_scale;
    bop::GtEntry w2c = bop::GtEntry::from_pose(1, s.cameras[c]);
    cam.cam_R_w2c = w2c.cam_R_m2c;
    cam.cam_t_w2c = w2c.cam_t_m2c;
    scene.camera[im_id] = cam;
    n_gt += v.gt.size();
    scene.gt[im_id] = std::move(v.gt);
    scene.gt_info[im_id] = std::move(v.gt_info);
    images[im_id] = std::move(v.images);
  }
  bop::write_scene(scene_dir, scene, &images);
  return n_gt;
}

inline void write_dataset_models(const SceneConfig& cfg, const SceneAssets& assets,
                                 const std::filesystem::path& root) {
  const auto models_dir = root / "models";
  bop::detail::ensure_dir(models_dir);
  std::map<int, bop::ModelInfo> info;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const Mesh& m = assets.models[i];
    write_ply(models_dir / bop::model_filename(cfg.models[i].obj_id), m);
    bop::ModelInfo mi;
    mi.diameter = mesh_diameter(m);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const auto& v : m.vertices()) lo = lo.cwiseMin(v), hi = hi.cwiseMax(v);
    mi.min = lo;
    mi.size = hi - lo;
    info[cfg.models[i].obj_id] = mi;
  }
  bop::write_models_info(models_dir / "models_info.json", info);
}

/// Writes root/{camera.json, models/, train/NNNNNN/...}. Scenes are generated
/// on up to `jobs` threads, each from its own derived random stream, so the
/// output does not depend on the thread count.
inline GenerateSummary generate_dataset(const SceneConfig& cfg, const std::filesystem::path& root,
                                        unsigned jobs = 1, const SceneAssets* preloaded = nullptr) {
  cfg.validate();
  SceneAssets loaded;
  if (!preloaded) loaded = SceneAssets::load(cfg);
  const SceneAssets& assets = preloaded ? *preloaded : loaded;

  bop::detail::ensure_dir(root);
  bop::write_dataset_camera(root / "camera.json", bop::DatasetCamera{cfg.intrinsics, cfg.depth_scale});
  write_dataset_models(cfg, assets, root);
  bop::detail::ensure_dir(split_dir(root));

  std::vector<std::size_t> gt_counts(static_cast<std::size_t>(cfg.scenes), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.scenes));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int s = next++; s < cfg.scenes; s = next++) {
      try {
        gt_counts[s] = generate_scene(cfg, assets, s, split_dir(root) / text::zero_pad(s));
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max(cfg.scenes, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  GenerateSummary sum;
  sum.scenes = cfg.scenes;
  sum.images = cfg.scenes * cfg.cameras;
  for (auto n : gt_counts) sum.gt_instances += n;
  return sum;
}

}  // namespace poseforge
