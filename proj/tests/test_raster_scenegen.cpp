#include <gtest/gtest.h>

#include "poseforge/bop_io.hpp"
#include "poseforge/evaluate.hpp"
#include "poseforge/raster.hpp"
#include "poseforge/scenegen.hpp"
#include "test_support.hpp"

using namespace poseforge;
using pf_test::expect_code;

namespace {

// fx = fy = 100 at z = 100 makes one pixel exactly one millimetre
const CameraIntrinsics kCam{100, 100, 0, 0, 40, 40};

Mesh quad(double x0, double y0, double x1, double y1, double z) {
  return Mesh({Vec3(x0, y0, z), Vec3(x1, y0, z), Vec3(x1, y1, z), Vec3(x0, y1, z)}, {Face{0, 1, 2}, Face{0, 2, 3}});
}

SceneConfig small_config(int objects, int distractors, int cameras, std::uint64_t seed) {
  SceneConfig cfg;
  cfg.models = {{"builtin:strawberry", 1, objects}};
  if (distractors > 0) cfg.distractors = {{"builtin:box", 0, distractors}};
  cfg.cameras = cameras;
  cfg.seed = seed;
  cfg.intrinsics = CameraIntrinsics{300, 300, 159.5, 119.5, 320, 240};
  return cfg;
}

std::size_t count_if_mask(const MaskMap& m, std::int32_t id) {
  return static_cast<std::size_t>(std::count(m.data.begin(), m.data.end(), id));
}

}  // namespace

TEST(Rasterize, EmptySceneIsBlank) {
  const RenderResult r = rasterize(std::span<const RenderInstance>(), kCam);
  for (double d : r.depth.data) EXPECT_EQ(d, 0.0);
  for (auto m : r.mask.data) EXPECT_EQ(m, 0);
}

TEST(Rasterize, TiltedTriangleDepthMatchesPlane) {
  const CameraIntrinsics k{500, 500, 99.5, 99.5, 200, 200};
  // plane z = 500 + 0.3 x through a triangle around the optical axis
  auto z_at = [](double x) { return 500.0 + 0.3 * x; };
  const Vec3 a(-40, -30, z_at(-40)), b(40, -30, z_at(40)), c(0, 40, z_at(0));
  const Mesh tri({a, b, c}, {Face{0, 1, 2}});
  const RenderInstance inst{&tri, Pose{}, 1};
  const RenderResult r = rasterize(std::span<const RenderInstance>(&inst, 1), k);
  std::size_t px = 0;
  for (auto m : r.mask.data) px += m != 0;
  EXPECT_GT(px, 0u);
  const Vec3 centroid = (a + b + c) / 3.0;
  const Vec2 p = project(centroid, k);
  const int u = static_cast<int>(std::lround(p.x())), v = static_cast<int>(std::lround(p.y()));
  // ray through the pixel centre (u,v) hits z = 500 + 0.3 x with x = z (u - cx) / fx
  const double rx = (u - k.cx) / k.fx;
  const double z_ray = 500.0 / (1.0 - 0.3 * rx);
  EXPECT_NEAR(r.depth.at(u, v), z_ray, 0.5);
  EXPECT_LE(r.depth.at(u, v), z_ray + 1e-9);
}

TEST(Rasterize, HalfIntegerQuadCoversExactPixels) {
  const Mesh q = quad(9.5, 9.5, 29.5, 29.5, 100);
  const RenderInstance inst{&q, Pose{}, 3};
  const RenderResult r = rasterize(std::span<const RenderInstance>(&inst, 1), kCam);
  EXPECT_EQ(count_if_mask(r.mask, 3), 400u);
  EXPECT_EQ(r.mask.at(10, 10), 3);
  EXPECT_EQ(r.mask.at(29, 29), 3);
  EXPECT_EQ(r.mask.at(30, 20), 0);
  EXPECT_EQ(r.mask.at(9, 20), 0);
  EXPECT_DOUBLE_EQ(r.depth.at(20, 20), 100.0);
}

TEST(Rasterize, FrontQuadOccludesBack) {
  const Mesh back = quad(9.5, 9.5, 29.5, 29.5, 100);
  const Mesh front = quad(4.75, 4.75, 9.75, 14.75, 50);
  const std::vector<RenderInstance> inst{{&back, Pose{}, 1}, {&front, Pose{}, 2}};
  const RenderResult r = rasterize(inst, kCam);
  // front spans x in [9.5, 19.5] px and y in [9.5, 29.5] px
  for (int y = 10; y < 30; ++y)
    for (int x = 10; x < 30; ++x) EXPECT_EQ(r.mask.at(x, y), x < 20 ? 2 : 1) << x << "," << y;
  EXPECT_DOUBLE_EQ(r.depth.at(12, 12), 50.0);
  EXPECT_DOUBLE_EQ(r.depth.at(25, 12), 100.0);
}

TEST(Visibility, HalfOccludedQuad) {
  const Mesh back = quad(9.5, 9.5, 29.5, 29.5, 100);
  const Mesh front = quad(4.75, 4.75, 9.75, 14.75, 50);
  const std::vector<RenderInstance> inst{{&back, Pose{}, 1}, {&front, Pose{}, 2}};
  const RenderResult r = rasterize(inst, kCam);
  const ImageU8 alone = render_silhouette(inst[0], kCam);
  const ImageU8 visible = instance_mask(r.mask, 1);
  const double vf = visibility_fraction(visible, alone);
  EXPECT_NEAR(vf, 0.5, 1.0 / static_cast<double>(count_nonzero(alone)));
}

TEST(Visibility, Examples) {
  ImageU8 a(4, 4, 1, 0), b(4, 4, 1, 0);
  a.at(1, 1) = 255, a.at(2, 2) = 255;
  EXPECT_EQ(visibility_fraction(a, a), 1.0);
  EXPECT_EQ(visibility_fraction(b, a), 0.0);
  EXPECT_EQ(visibility_fraction(b, b), 0.0);
  expect_code([&] { visibility_fraction(ImageU8(3, 4, 1), a); }, ErrorCode::DimensionMismatch);
}

TEST(Visibility, MaskBbox) {
  ImageU8 m(10, 10, 1, 0);
  EXPECT_EQ(mask_bbox(m), (std::array<int, 4>{-1, -1, -1, -1}));
  m.at(2, 3) = 255, m.at(6, 4) = 255;
  EXPECT_EQ(mask_bbox(m), (std::array<int, 4>{2, 3, 5, 2}));
}

TEST(Rasterize, BehindNearPlaneClipped) {
  const Mesh q = quad(-50, -50, 50, 50, -10);
  const RenderInstance inst{&q, Pose{}, 1};
  const RenderResult r = rasterize(std::span<const RenderInstance>(&inst, 1), kCam);
  for (auto m : r.mask.data) EXPECT_EQ(m, 0);
}

TEST(Builtin, MeshesAreClosedAndSized) {
  for (const char* name : {"builtin:strawberry", "builtin:sphere", "builtin:box", "builtin:cylinder"}) {
    const Mesh m = builtin::make(name);
    EXPECT_GT(m.faces().size(), 0u) << name;
    EXPECT_GT(m.diameter(), 20.0) << name;
    EXPECT_LT(m.diameter(), 100.0) << name;
  }
  EXPECT_NEAR(builtin::make("builtin:sphere").origin_radius(), 25.0, 1e-9);
  expect_code([] { builtin::make("builtin:teapot"); }, ErrorCode::InvalidConfig);
}

TEST(Placement, SingleSphereRestsOnPlane) {
  SceneConfig cfg;
  cfg.models = {{"builtin:sphere", 1, 1}};
  const SceneAssets assets = SceneAssets::load(cfg);
  const auto placed = sample_scene(cfg, assets, std::uint64_t{5});
  ASSERT_EQ(placed.size(), 1u);
  EXPECT_EQ(placed[0].world.translation.z(), placed[0].radius);
  EXPECT_NEAR(placed[0].radius, 25.0, 1e-9);
}

TEST(Placement, NoInterpenetrationAndDeterministic) {
  SceneConfig cfg;
  cfg.models = {{"builtin:strawberry", 1, 6}, {"builtin:cylinder", 2, 2}};
  cfg.distractors = {{"builtin:box", 0, 2}};
  const SceneAssets assets = SceneAssets::load(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto placed = sample_scene(cfg, assets, seed);
    ASSERT_EQ(placed.size(), 10u);
    for (std::size_t i = 0; i < placed.size(); ++i) {
      EXPECT_GE(placed[i].world.translation.z(), placed[i].radius - 1e-6);
      EXPECT_TRUE(is_rotation(placed[i].world.rotation, 1e-9));
      for (std::size_t j = i + 1; j < placed.size(); ++j)
        EXPECT_GE((placed[i].world.translation - placed[j].world.translation).norm(),
                  placed[i].radius + placed[j].radius);
    }
    const auto again = sample_scene(cfg, assets, seed);
    for (std::size_t i = 0; i < placed.size(); ++i) {
      EXPECT_EQ(placed[i].world.rotation, again[i].world.rotation);
      EXPECT_EQ(placed[i].world.translation, again[i].world.translation);
    }
  }
}

TEST(Placement, OvercrowdedFails) {
  SceneConfig cfg;
  cfg.models = {{"builtin:sphere", 1, 10}};
  cfg.plane_mm = 110;
  const SceneAssets assets = SceneAssets::load(cfg);
  expect_code([&] { sample_scene(cfg, assets, std::uint64_t{1}); }, ErrorCode::PlacementFailure);
}

TEST(Cameras, OverheadCameraSeesCentroidAtPrincipalPoint) {
  const CameraIntrinsics k{600, 600, 319.5, 239.5, 640, 480};
  const Vec3 centroid(12, -7, 20);
  const Pose w2c = look_at(centroid + Vec3(0, 0, 600), centroid);
  EXPECT_TRUE(is_rotation(w2c.rotation, 1e-12));
  EXPECT_LE((project(w2c.apply(centroid), k) - Vec2(k.cx, k.cy)).norm(), 1e-6);
}

TEST(Cameras, ShellAndHemisphereConstraints) {
  SceneConfig cfg;
  cfg.cameras = 1000;
  cfg.radius_min = 400;
  cfg.radius_max = 650;
  const Vec3 centroid(5, 5, 15);
  Rng rng(9);
  const auto cams = sample_cameras(cfg, centroid, {centroid}, rng);
  ASSERT_EQ(cams.size(), 1000u);
  for (const auto& c : cams) {
    const Vec3 eye = camera_center(c);
    const double r = (eye - centroid).norm();
    EXPECT_GE(r, cfg.radius_min - 1e-9);
    EXPECT_LE(r, cfg.radius_max + 1e-9);
    EXPECT_GT(eye.z(), centroid.z());
    EXPECT_LE((project(c.apply(centroid), cfg.intrinsics) - Vec2(cfg.intrinsics.cx, cfg.intrinsics.cy)).norm(), 1e-6);
  }
  Rng a(3), b(3);
  const auto ca = sample_cameras(cfg, centroid, {}, a), cb = sample_cameras(cfg, centroid, {}, b);
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].translation, cb[i].translation);
}

TEST(Cameras, ImpossibleViewFails) {
  SceneConfig cfg;
  cfg.cameras = 1;
  cfg.radius_min = 10;
  cfg.radius_max = 11;
  Rng rng(1);
  expect_code([&] { sample_cameras(cfg, Vec3::Zero(), {Vec3(500, 0, 0), Vec3(-500, 0, 0)}, rng); },
              ErrorCode::CameraSamplingFailure);
}

TEST(Views, DepthAndMaskCoincideAndDepthBoundsVertices) {
  const SceneConfig cfg = small_config(4, 2, 3, 11);
  const SceneAssets assets = SceneAssets::load(cfg);
  const SceneSample s = sample_scene_and_cameras(cfg, assets, 0);
  for (const auto& w2c : s.cameras) {
    const RenderedView v = render_view(s.objects, w2c, cfg.intrinsics);
    for (std::size_t i = 0; i < v.render.depth.data.size(); ++i)
      EXPECT_EQ(v.render.depth.data[i] != 0.0, v.render.mask.data[i] != 0);
    for (const auto& inst : v.instances)
      for (const auto& x : inst.mesh->vertices()) {
        const Vec3 c = inst.pose.apply(x);
        const Vec2 p = project(c, cfg.intrinsics);
        if (!cfg.intrinsics.contains(p)) continue;
        const double d = v.render.depth.at(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())));
        EXPECT_GT(d, 0.0);
        EXPECT_LE(d, c.z() + 0.5);
      }
  }
}

TEST(Views, DistractorsOccludeButAreNotAnnotated) {
  const SceneConfig cfg = small_config(3, 3, 4, 21);
  const SceneAssets assets = SceneAssets::load(cfg);
  const SceneSample s = sample_scene_and_cameras(cfg, assets, 0);
  for (const auto& w2c : s.cameras) {
    const AnnotatedView v = annotate_view(s.objects, w2c, cfg.intrinsics, cfg.depth_scale);
    EXPECT_LE(v.gt.size(), 3u);
    for (const auto& g : v.gt) EXPECT_EQ(g.obj_id, 1);
    for (const auto& info : v.gt_info) {
      EXPECT_GT(info.visib_fract, 0.0);
      EXPECT_LE(info.visib_fract, 1.0);
      EXPECT_LE(info.px_count_visib, info.px_count_all);
    }
  }
}

TEST(Config, ParseAndStrictKeys) {
  const SceneConfig cfg = parse_scene_config(R"({
    "models": [{"path": "builtin:strawberry", "obj_id": 1, "count": 3}],
    "distractors": [{"path": "builtin:box", "count": 2}],
    "plane_mm": 500, "cameras": 4, "radius_mm": [400, 600], "image": [320, 240],
    "intrinsics": {"fx": 300, "fy": 310}, "seed": 9, "scenes": 2
  })");
  EXPECT_EQ(cfg.models.size(), 1u);
  EXPECT_EQ(cfg.models[0].count, 3);
  EXPECT_EQ(cfg.distractors[0].count, 2);
  EXPECT_EQ(cfg.intrinsics.width, 320);
  EXPECT_EQ(cfg.intrinsics.cx, 159.5);
  EXPECT_EQ(cfg.intrinsics.fy, 310);
  EXPECT_EQ(cfg.radius_max, 600);
  EXPECT_EQ(cfg.seed, 9u);
  expect_code([] { parse_scene_config(R"({"models": [{"path": "builtin:box", "obj_id": 1}], "colour": 1})"); },
              ErrorCode::InvalidConfig);
  expect_code([] { parse_scene_config(R"({"models": [{"path": "builtin:box", "obj_id": 1}], "radius_mm": [5, 2]})"); },
              ErrorCode::InvalidConfig);
  expect_code([] { parse_scene_config("{not json"); }, ErrorCode::InvalidConfig);
  expect_code([] { parse_scene_config(R"({"models": []})"); }, ErrorCode::InvalidConfig);
}

TEST(Generate, SingleObjectSmokeValidates) {
  pf_test::TempDir dir("gen1");
  SceneConfig cfg = small_config(1, 0, 1, 3);
  const GenerateSummary sum = generate_dataset(cfg, dir.path());
  EXPECT_EQ(sum.images, 1);
  EXPECT_EQ(sum.gt_instances, 1u);
  const bop::ValidationReport rep = bop::validate_dataset(dir.path());
  EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations[0].message);
  const bop::Scene scene = bop::read_scene(split_dir(dir.path()) / "000000");
  EXPECT_EQ(scene.gt_info.at(0)[0].visib_fract, 1.0);
}

TEST(Generate, DeterministicAcrossThreadCounts) {
  pf_test::TempDir a("gen_a"), b("gen_b");
  SceneConfig cfg = small_config(3, 2, 2, 17);
  cfg.scenes = 3;
  generate_dataset(cfg, a.path(), 1);
  generate_dataset(cfg, b.path(), 3);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    EXPECT_EQ(pf_test::slurp(e.path()), pf_test::slurp(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20u);
}

TEST(Generate, GroundTruthSelfEvaluationIsPerfect) {
  pf_test::TempDir dir("gen_eval");
  SceneConfig cfg = small_config(3, 2, 3, 23);
  cfg.scenes = 2;
  generate_dataset(cfg, dir.path());
  const auto gt = collect_ground_truth(dir.path());
  const auto rows = bop::ground_truth_as_results(split_dir(dir.path()));
  const ModelLibrary lib = load_model_library(dir.path() / "models", 512);
  const Evaluation ev = evaluate_results(gt, rows, lib);
  EXPECT_GT(ev.report.instance_count, 0u);
  for (double r : ev.report.rates) EXPECT_EQ(r, 1.0);
  EXPECT_EQ(ev.report.rotation_error_avg, 0.0);
  EXPECT_EQ(ev.report.translation_error_avg, 0.0);
}
