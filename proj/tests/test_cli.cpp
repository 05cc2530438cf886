#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "poseforge/bop_io.hpp"
#include "poseforge/evaluate.hpp"
#include "poseforge/scenegen.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct Proc {
  int code = -1;
  std::string out;
};

Proc run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" POSE_FORGE_BIN "' " + args + " 2>/dev/null";
  Proc r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<double> rates(const nlohmann::json& rep) {
  std::vector<double> out;
  for (const auto& [k, v] : rep.items())
    if (k.rfind("ADD-S_", 0) == 0) out.push_back(v.get<double>());
  return out;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const char* kConfig = R"({
  "models": [{"path": "builtin:box", "obj_id": 1, "count": 2},
             {"path": "builtin:cylinder", "obj_id": 2}],
  "distractors": [{"path": "builtin:sphere", "count": 1}],
  "cameras": 2, "radius_mm": [450, 650], "image": [160, 120],
  "intrinsics": {"fx": 150, "fy": 150}, "seed": 4, "scenes": 2
})";

/// One generated dataset shared by the read-only tests.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new pf_test::TempDir("cli");
    pf_test::spit(dir_->path() / "scene.json", kConfig);
    const Proc g = run("generate --config " + q(dir_->path() / "scene.json") + " --out " + q(data()) + " --jobs 2");
    ASSERT_EQ(g.code, 0) << g.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path root() { return dir_->path(); }
  static fs::path data() { return dir_->path() / "data"; }

  static pf_test::TempDir* dir_;
};

pf_test::TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("evaluate --help").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("evaluate --dataset x").code, 1);
  EXPECT_EQ(run("validate --dataset " + q(data()) + " --format xml").code, 1);
}

TEST_F(Cli, GenerateReportsCountsAndValidates) {
  const Proc v = run("validate --dataset " + q(data()));
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("0 violation(s)"), std::string::npos) << v.out;
  const Proc j = run("validate --dataset " + q(data()) + " --format json");
  EXPECT_EQ(j.code, 0);
  EXPECT_NE(j.out.find("\"violations\""), std::string::npos);
}

TEST_F(Cli, GenerateSeedIsDeterministicAcrossJobs) {
  pf_test::TempDir d("cli_det");
  const fs::path cfg = root() / "scene.json";
  ASSERT_EQ(run("generate --config " + q(cfg) + " --out " + q(d.path() / "a") + " --seed 11 --jobs 1").code, 0);
  ASSERT_EQ(run("generate --config " + q(cfg) + " --out " + q(d.path() / "b") + " --seed 11", "POSE_FORGE_JOBS=3").code,
            0);
  ASSERT_EQ(run("generate --config " + q(cfg) + " --out " + q(d.path() / "c") + " --seed 12 --jobs 1").code, 0);
  bool any_diff_c = false;
  for (const auto& e : fs::recursive_directory_iterator(d.path() / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), d.path() / "a");
    ASSERT_TRUE(fs::exists(d.path() / "b" / rel)) << rel;
    EXPECT_EQ(pf_test::slurp(e.path()), pf_test::slurp(d.path() / "b" / rel)) << rel;
    if (rel.filename() == "scene_gt.json")
      any_diff_c |= pf_test::slurp(e.path()) != pf_test::slurp(d.path() / "c" / rel);
  }
  EXPECT_TRUE(any_diff_c);
}

TEST_F(Cli, GenerateDataErrors) {
  EXPECT_EQ(run("generate --config " + q(root() / "missing.json") + " --out " + q(root() / "x")).code, 2);
  pf_test::spit(root() / "bad.json", R"({"models": [{"path": "builtin:box", "obj_id": 1}], "colour": 3})");
  EXPECT_EQ(run("generate --config " + q(root() / "bad.json") + " --out " + q(root() / "x")).code, 2);
  pf_test::spit(root() / "afile", "x");
  EXPECT_EQ(run("generate --config " + q(root() / "scene.json") + " --out " + q(root() / "afile" / "sub")).code, 2);
  EXPECT_EQ(run("generate --config " + q(root() / "scene.json") + " --out " + q(root() / "y"), "POSE_FORGE_JOBS=zero")
                .code,
            1);
}

TEST_F(Cli, EvaluateGroundTruthAsPredictions) {
  const fs::path csv = root() / "gt_results.csv";
  poseforge::bop::write_results(csv, poseforge::bop::ground_truth_as_results(poseforge::locate_dataset(data()).scenes));
  const Proc t = run("evaluate --results " + q(csv) + " --dataset " + q(data()));
  ASSERT_EQ(t.code, 0);
  for (const char* row : {"ADD-S_0p1_avg", "ADD-S_0p2_avg", "ADD-S_0p3_avg", "ADD-S_0p4_avg", "ADD-S_0p5_avg"})
    EXPECT_NE(t.out.find(row), std::string::npos) << row;
  const Proc j = run("evaluate --results " + q(csv) + " --dataset " + q(data()) + " --format json --points 256");
  ASSERT_EQ(j.code, 0);
  const auto rep = nlohmann::json::parse(j.out);
  EXPECT_EQ(rates(rep), std::vector<double>(5, 1.0));
  EXPECT_EQ(rep.at("unmatched_gt_count").get<std::size_t>(), 0u);

  const fs::path out = root() / "report.json";
  ASSERT_EQ(run("evaluate --results " + q(csv) + " --dataset " + q(data()) + " --format json --out " + q(out)).code, 0);
  EXPECT_EQ(rates(nlohmann::json::parse(pf_test::slurp(out))).size(), 5u);
}

TEST_F(Cli, EvaluateEmptyResults) {
  const fs::path csv = root() / "empty.csv";
  pf_test::spit(csv, "scene_id,im_id,obj_id,score,R,t,time\n");
  const Proc j = run("evaluate --results " + q(csv) + " --dataset " + q(data()) + " --format json");
  ASSERT_EQ(j.code, 0);
  const auto rep = nlohmann::json::parse(j.out);
  EXPECT_EQ(rates(rep), std::vector<double>(5, 0.0));
  EXPECT_EQ(rep.at("unmatched_gt_count").get<std::size_t>(), rep.at("instance_count").get<std::size_t>());
  EXPECT_GT(rep.at("instance_count").get<std::size_t>(), 0u);
}

TEST_F(Cli, EvaluateErrors) {
  const fs::path empty = root() / "empty2.csv";
  pf_test::spit(empty, "scene_id,im_id,obj_id,score,R,t,time\n");
  const std::string base = "evaluate --results " + q(empty) + " --dataset " + q(data());
  EXPECT_EQ(run(base + " --thresholds 0.3,0.2").code, 1);
  EXPECT_EQ(run(base + " --thresholds 0.1,1.5").code, 1);
  EXPECT_EQ(run(base + " --thresholds 0,0.5").code, 1);
  EXPECT_EQ(run(base + " --metric chamfer").code, 1);
  EXPECT_EQ(run(base + " --thresholds 0.25,0.75").code, 0);
  const fs::path bad = root() / "bad.csv";
  pf_test::spit(bad, "scene_id,im_id,obj_id,score,R,t,time\n0,0,1,0.5,1 0 0,0 0 1,-1\n");
  EXPECT_EQ(run("evaluate --results " + q(bad) + " --dataset " + q(data())).code, 2);
  EXPECT_EQ(run("evaluate --results " + q(root() / "nope.csv") + " --dataset " + q(data())).code, 2);
  EXPECT_EQ(run("evaluate --results " + q(empty) + " --dataset " + q(root() / "nowhere")).code, 2);
}

TEST_F(Cli, BenchPrintsTiming) {
  const Proc t = run("bench --dataset " + q(data()) + " --points 128");
  ASSERT_EQ(t.code, 0);
  EXPECT_NE(t.out.find("Average NMS Time"), std::string::npos);
  EXPECT_NE(t.out.find("ADD-S_0p1_avg"), std::string::npos);
  const Proc j = run("bench --dataset " + q(data()) + " --points 128 --format json");
  ASSERT_EQ(j.code, 0);
  const auto rep = nlohmann::json::parse(j.out);
  EXPECT_GE(rep.at("timing").at("avg_total_ms").get<double>(), rep.at("timing").at("avg_nms_ms").get<double>());
  EXPECT_EQ(rep.at("metrics").at("ADD-S_0p1_avg").get<double>(), 1.0);
  EXPECT_EQ(run("bench --dataset " + q(data()) + " --nms-iou 0").code, 1);
  EXPECT_EQ(run("bench --dataset " + q(data()) + " --nms-iou 1.2").code, 1);
}

TEST_F(Cli, ValidateListsViolationsWithoutFailing) {
  pf_test::TempDir d("cli_mut");
  fs::copy(data(), d.path() / "data", fs::copy_options::recursive);
  fs::path gt;
  for (const auto& e : fs::recursive_directory_iterator(d.path() / "data"))
    if (e.path().filename() == "scene_gt.json") gt = e.path();
  ASSERT_FALSE(gt.empty());
  auto j = nlohmann::ordered_json::parse(pf_test::slurp(gt));
  j.begin().value()[0]["cam_R_m2c"] = {2, 0, 0, 0, 1, 0, 0, 0, 1};
  pf_test::spit(gt, j.dump(2) + "\n");
  const Proc v = run("validate --dataset " + q(d.path() / "data"));
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out.find("0 violation(s)"), std::string::npos) << v.out;
  EXPECT_NE(v.out.find("scene_gt.json"), std::string::npos) << v.out;
}

TEST_F(Cli, AugmentIsDeterministicAndValid) {
  pf_test::TempDir d("cli_aug");
  ASSERT_EQ(run("augment --dataset " + q(data()) + " --out " + q(d.path() / "a") + " --seed 5").code, 0);
  ASSERT_EQ(run("augment --dataset " + q(data()) + " --out " + q(d.path() / "b") + " --seed 5").code, 0);
  ASSERT_EQ(run("augment --dataset " + q(data()) + " --out " + q(d.path() / "c") + " --seed 5 --no-color").code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d.path() / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), d.path() / "a");
    EXPECT_EQ(pf_test::slurp(e.path()), pf_test::slurp(d.path() / "b" / rel)) << rel;
  }
  EXPECT_GT(files, 0u);
  EXPECT_EQ(run("validate --dataset " + q(d.path() / "a")).code, 0);
  EXPECT_NE(run("validate --dataset " + q(d.path() / "c")).out.find("0 violation(s)"), std::string::npos);
  EXPECT_EQ(run("augment --dataset " + q(root() / "nowhere") + " --out " + q(d.path() / "z")).code, 2);
}

TEST(CliSelftest, PassesAndListsDeviations) {
  const Proc t = run("losses selftest --trials 10 --seed 2");
  EXPECT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("PASS"), std::string::npos);
  EXPECT_EQ(t.out.find("FAIL"), std::string::npos);
  const Proc j = run("losses selftest --trials 5 --format json");
  ASSERT_EQ(j.code, 0);
  const auto arr = nlohmann::json::parse(j.out);
  EXPECT_GE(arr.size(), 4u);
  for (const auto& e : arr) EXPECT_TRUE(e.at("passed").get<bool>()) << e.dump();
}

TEST(ExampleConfig, ParsesWithDocumentedValues) {
  const poseforge::SceneConfig cfg = poseforge::load_scene_config(EXAMPLE_CONFIG);
  EXPECT_EQ(cfg.models.size(), 3u);
  EXPECT_EQ(cfg.distractors.size(), 1u);
  EXPECT_EQ(cfg.cameras, 10);
  EXPECT_EQ(cfg.scenes, 5);
  EXPECT_EQ(cfg.intrinsics.width, 640);
  EXPECT_NO_THROW(cfg.validate());
}
