#include <gtest/gtest.h>

#include "poseforge/bop_io.hpp"
#include "poseforge/png_io.hpp"
#include "test_support.hpp"

using namespace poseforge;
using namespace poseforge::bop;
using pf_test::expect_code;

namespace {

constexpr int kW = 8, kH = 6;

/// One image, one object whose mask covers a 3x2 block.
std::pair<Scene, std::map<int, ImageSet>> fixture_scene() {
  Scene s;
  Pose p;
  p.rotation = rot_x(30) * rot_z(-45);
  p.translation = Vec3(12.5, -3.25, 812.0);
  s.gt[0] = {GtEntry::from_pose(3, p)};
  CameraEntry c;
  c.cam_K = {500, 0, 3.5, 0, 500, 2.5, 0, 0, 1};
  s.camera[0] = c;
  GtInfoEntry info;
  info.bbox_obj = {2, 1, 3, 2};
  info.bbox_visib = {2, 1, 3, 2};
  info.px_count_all = 6;
  info.px_count_valid = 6;
  info.px_count_visib = 6;
  info.visib_fract = 1.0;
  s.gt_info[0] = {info};

  ImageSet set;
  set.rgb = ImageU8(kW, kH, 3, 40);
  set.depth = ImageU16(kW, kH, 1, 0);
  ImageU8 mask(kW, kH, 1, 0);
  for (int y = 1; y < 3; ++y)
    for (int x = 2; x < 5; ++x) mask.at(x, y) = 255, set.depth.at(x, y) = 8120;
  set.masks = {mask};
  set.masks_visib = {mask};
  return {s, {{0, set}}};
}

const char* kCsv =
    "scene_id,im_id,obj_id,score,R,t,time\n"
    "1,0,2,0.9,1 0 0 0 1 0 0 0 1,0 0 1000,0.5\n";

}  // namespace

TEST(Scene, MinimalRoundTrip) {
  pf_test::TempDir dir("scene");
  auto [scene, images] = fixture_scene();
  write_scene(dir.path(), scene, &images);
  const Scene back = read_scene(dir.path(), ReadOptions{true});
  ASSERT_EQ(back.gt.size(), 1u);
  ASSERT_EQ(back.gt.at(0).size(), 1u);
  EXPECT_EQ(back.gt.at(0)[0].cam_R_m2c, scene.gt.at(0)[0].cam_R_m2c);
  EXPECT_EQ(back.gt.at(0)[0].cam_t_m2c, scene.gt.at(0)[0].cam_t_m2c);
  EXPECT_EQ(back, scene);
}

TEST(Scene, WriteIsByteIdempotent) {
  pf_test::TempDir a("scene_a"), b("scene_b");
  auto [scene, images] = fixture_scene();
  write_scene(a.path(), scene, &images);
  write_scene(b.path(), read_scene(a.path()), &images);
  for (const char* f : {"scene_gt.json", "scene_camera.json", "scene_gt_info.json", "rgb/000000.png",
                        "depth/000000.png", "mask/000000_000000.png"})
    EXPECT_EQ(pf_test::slurp(a / f), pf_test::slurp(b / f)) << f;
}

TEST(Scene, KeysSortedNumerically) {
  Scene s;
  for (int id : {10, 2, 1}) {
    s.gt[id] = {GtEntry{}};
    s.camera[id] = CameraEntry{};
    s.gt_info[id] = {GtInfoEntry{}};
  }
  const std::string txt = serialize_scene_gt(s);
  EXPECT_LT(txt.find("\"1\""), txt.find("\"2\""));
  EXPECT_LT(txt.find("\"2\""), txt.find("\"10\""));
}

TEST(Scene, ShortestRoundTripFloats) {
  Scene s;
  GtEntry e;
  e.cam_t_m2c = {0.1, 1.0 / 3.0, 1e-7};
  s.gt[0] = {e};
  s.camera[0] = CameraEntry{};
  const std::string txt = serialize_scene_gt(s);
  EXPECT_NE(txt.find("0.1,"), std::string::npos);
  EXPECT_NE(txt.find("0.3333333333333333"), std::string::npos);
  pf_test::TempDir dir("floats");
  write_scene(dir.path(), s);
  EXPECT_EQ(read_scene(dir.path()).gt.at(0)[0].cam_t_m2c, e.cam_t_m2c);
}

TEST(Scene, InconsistentKeys) {
  pf_test::TempDir dir("incons");
  pf_test::spit(dir / "scene_gt.json", R"({"7": [{"obj_id": 1, "cam_R_m2c": [1,0,0,0,1,0,0,0,1], "cam_t_m2c": [0,0,1]}]})");
  pf_test::spit(dir / "scene_camera.json", R"({"0": {"cam_K": [1,0,0,0,1,0,0,0,1], "depth_scale": 0.1}})");
  expect_code([&] { read_scene(dir.path()); }, ErrorCode::InconsistentKeys);
}

TEST(Scene, MissingAndMalformedFiles) {
  pf_test::TempDir dir("missing");
  expect_code([&] { read_scene(dir.path()); }, ErrorCode::MissingFile);
  pf_test::spit(dir / "scene_gt.json", "{\"0\": [");
  pf_test::spit(dir / "scene_camera.json", "{}");
  expect_code([&] { read_scene(dir.path()); }, ErrorCode::JsonError);
}

TEST(Scene, CheckFilesReportsMissingRaster) {
  pf_test::TempDir dir("chk");
  auto [scene, images] = fixture_scene();
  write_scene(dir.path(), scene, &images);
  std::filesystem::remove(mask_path(dir.path(), 0, 0));
  EXPECT_NO_THROW(read_scene(dir.path()));
  expect_code([&] { read_scene(dir.path(), ReadOptions{true}); }, ErrorCode::MissingFile);
}

TEST(Scene, NonWritableDir) {
  pf_test::TempDir dir("nw");
  pf_test::spit(dir / "file", "x");
  expect_code([&] { write_scene(dir / "file" / "sub", Scene{}); }, ErrorCode::NonWritableDir);
}

TEST(Depth, UnitArithmetic) {
  ImageU16 raw(1, 1, 1, 10000);
  EXPECT_DOUBLE_EQ(decode_depth(raw, 0.1).data[0], 1000.0);
}

TEST(Depth, RoundTripWithinHalfUnit) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mm(0, 6000);
  Image<double> d(50, 40, 1);
  for (auto& v : d.data) v = mm(rng);
  const Image<double> back = decode_depth(encode_depth(d, 0.1), 0.1);
  for (std::size_t i = 0; i < d.data.size(); ++i) EXPECT_LE(std::abs(back.data[i] - d.data[i]), 0.05 + 1e-12);
}

TEST(Depth, OutOfRange) {
  Image<double> d(1, 1, 1, 7000.0);
  expect_code([&] { encode_depth(d, 0.1); }, ErrorCode::InvalidConfig);
}

TEST(Png, SixteenBitRoundTrip) {
  pf_test::TempDir dir("png");
  ImageU16 img(5, 3, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint16_t>(i * 4099);
  write_png16(dir / "d.png", img);
  EXPECT_EQ(read_png16(dir / "d.png"), img);
  const PngHeader h = read_png_header(dir / "d.png");
  EXPECT_EQ(h.width, 5);
  EXPECT_EQ(h.height, 3);
  EXPECT_EQ(h.bit_depth, 16);
}

TEST(Results, ParseFixture) {
  const auto rows = parse_results(kCsv);
  ASSERT_EQ(rows.size(), 1u);
  const ResultRow& r = rows[0];
  EXPECT_EQ(r.scene_id, 1);
  EXPECT_EQ(r.im_id, 0);
  EXPECT_EQ(r.obj_id, 2);
  EXPECT_EQ(r.score, 0.9);
  EXPECT_EQ(r.R, (std::array<double, 9>{1, 0, 0, 0, 1, 0, 0, 0, 1}));
  EXPECT_EQ(r.t, (std::array<double, 3>{0, 0, 1000}));
  EXPECT_EQ(r.time, 0.5);
}

TEST(Results, WrongFloatCountReportsLine) {
  const std::string bad =
      "scene_id,im_id,obj_id,score,R,t,time\n"
      "1,0,2,0.9,1 0 0 0 1 0 0 0 1,0 0 1000,0.5\n"
      "1,1,2,0.9,1 0 0 0 1 0 0 0,0 0 1000,0.5\n";
  try {
    parse_results(bad);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FieldCountError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Results, Errors) {
  expect_code([] { parse_results("scene,im\n"); }, ErrorCode::CsvError);
  expect_code([] { parse_results(std::string(kResultsHeader) + "\n1,0,2,0.9,1 0 0 0 1 0 0 0 1,0 0 1000\n"); },
              ErrorCode::CsvError);
  expect_code([] { parse_results(std::string(kResultsHeader) + "\n1,0,2,0.9,1 0 0 0 1 0 0 0 1,0 nan 1000,1\n"); },
              ErrorCode::NonFiniteNumber);
  expect_code([] { parse_results(std::string(kResultsHeader) + "\n1,0,2,inf,1 0 0 0 1 0 0 0 1,0 0 1000,1\n"); },
              ErrorCode::NonFiniteNumber);
  expect_code([] { parse_results(std::string(kResultsHeader) + "\n1,0,2,1.5,1 0 0 0 1 0 0 0 1,0 0 1000,1\n"); },
              ErrorCode::CsvError);
  expect_code([] { parse_results(std::string(kResultsHeader) + "\nx,0,2,0.5,1 0 0 0 1 0 0 0 1,0 0 1000,1\n"); },
              ErrorCode::CsvError);
}

TEST(Results, RoundTripIsIdempotent) {
  std::mt19937_64 rng(5);
  std::vector<ResultRow> rows;
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 30; ++i) {
    const Pose p = pf_test::random_pose(rng);
    const GtEntry g = GtEntry::from_pose(1 + i % 4, p);
    rows.push_back(ResultRow{i / 10, i, g.obj_id, u(rng), g.cam_R_m2c, g.cam_t_m2c, u(rng) * 3});
  }
  const std::string once = serialize_results(rows);
  EXPECT_EQ(parse_results(once), rows);
  EXPECT_EQ(serialize_results(parse_results(once)), once);
  pf_test::TempDir dir("csv");
  write_results(dir / "r.csv", rows);
  EXPECT_EQ(read_results(dir / "r.csv"), rows);
}

TEST(Results, BlankLinesAndHeaderOnly) {
  EXPECT_TRUE(parse_results(std::string(kResultsHeader) + "\n").empty());
  EXPECT_EQ(parse_results(std::string(kCsv) + "\n\n").size(), 1u);
}

TEST(Validate, PristineSceneIsClean) {
  pf_test::TempDir dir("val");
  auto [scene, images] = fixture_scene();
  write_scene(dir.path(), scene, &images);
  const ValidationReport rep = validate_dataset(dir.path());
  EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations[0].message);
  EXPECT_EQ(rep.images_checked, 1u);
}

TEST(Validate, CorruptRotationReported) {
  pf_test::TempDir dir("val_rot");
  auto [scene, images] = fixture_scene();
  scene.gt[0][0].cam_R_m2c[4] += 0.1;
  write_scene(dir.path(), scene, &images);
  const ValidationReport rep = validate_dataset(dir.path());
  ASSERT_FALSE(rep.ok());
  bool found = false;
  for (const auto& v : rep.violations)
    found = found || (v.im_id == 0 && v.message.find("rotation") != std::string::npos &&
                      v.path.find("scene_gt.json") != std::string::npos);
  EXPECT_TRUE(found);
}

TEST(Validate, MissingMaskNamed) {
  pf_test::TempDir dir("val_mask");
  auto [scene, images] = fixture_scene();
  write_scene(dir.path(), scene, &images);
  const auto gone = mask_path(dir.path(), 0, 0);
  std::filesystem::remove(gone);
  const ValidationReport rep = validate_dataset(dir.path());
  ASSERT_FALSE(rep.ok());
  bool named = false;
  for (const auto& v : rep.violations) named = named || v.path == gone.string();
  EXPECT_TRUE(named);
}

TEST(Validate, VisibFractAndDimensions) {
  pf_test::TempDir dir("val_vf");
  auto [scene, images] = fixture_scene();
  scene.gt_info[0][0].visib_fract = 1.5;
  images[0].masks[0] = ImageU8(kW + 1, kH, 1, 0);
  write_scene(dir.path(), scene, &images);
  const ValidationReport rep = validate_dataset(dir.path());
  bool vf = false, dim = false;
  for (const auto& v : rep.violations) {
    vf = vf || v.message.find("visib_fract") != std::string::npos;
    dim = dim || v.message.find("dimension") != std::string::npos;
  }
  EXPECT_TRUE(vf);
  EXPECT_TRUE(dim);
}

TEST(Validate, BadIntrinsicsStructure) {
  pf_test::TempDir dir("val_k");
  auto [scene, images] = fixture_scene();
  scene.camera[0].cam_K[1] = 0.5;
  write_scene(dir.path(), scene, &images);
  EXPECT_FALSE(validate_dataset(dir.path()).ok());
}

TEST(DatasetCamera, RoundTrip) {
  pf_test::TempDir dir("cam");
  DatasetCamera c{CameraIntrinsics{600, 601, 319.5, 239.5, 640, 480}, 0.1};
  write_dataset_camera(dir / "camera.json", c);
  const DatasetCamera back = read_dataset_camera(dir / "camera.json");
  EXPECT_EQ(back.intrinsics.fx, 600);
  EXPECT_EQ(back.intrinsics.fy, 601);
  EXPECT_EQ(back.intrinsics.cx, 319.5);
  EXPECT_EQ(back.intrinsics.width, 640);
  EXPECT_EQ(back.depth_scale, 0.1);
}
