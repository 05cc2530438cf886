// pose_forge: dataset generation, validation, evaluation, augmentation,
// loss self-test and timing benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "poseforge/poseforge.hpp"

namespace fs = std::filesystem;
using namespace poseforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config, out, dataset, results, models;
  std::optional<std::uint64_t> seed;
  std::vector<double> thresholds = default_thresholds();
  std::size_t points = kDefaultEvalPoints;
  double nms_iou = kDefaultNmsIou;
  std::string format = "table";
  std::string metric = "adds";
  unsigned jobs = 0;
  std::optional<int> scenes;
  std::size_t trials = 100;
  bool no_color = false;
};

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  if (const char* env = std::getenv("POSE_FORGE_JOBS")) {
    auto v = text::parse_int<int>(env);
    if (!v || *v < 1) throw UsageError("POSE_FORGE_JOBS must be a positive integer");
    return static_cast<unsigned>(*v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void check_thresholds(const std::vector<double>& t) {
  try {
    validate_thresholds(t);
  } catch (const Error& e) {
    throw UsageError(std::string("--thresholds: ") + e.what());
  }
  if (t.empty()) throw UsageError("--thresholds needs at least one value");
}

PoseMetric parse_metric(const std::string& m) { return m == "add" ? PoseMetric::Add : PoseMetric::AddS; }

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + out_path);
  f << text;
}

fs::path models_dir_for(const Options& o) {
  if (!o.models.empty()) return o.models;
  if (auto m = locate_dataset(o.dataset).models) return *m;
  throw Error(ErrorCode::MissingFile, "no models/ directory found near " + o.dataset + "; pass --models");
}

// ------------------------------------------------------------------ commands

int cmd_generate(const Options& o) {
  SceneConfig cfg = load_scene_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.scenes) cfg.scenes = *o.scenes;
  const GenerateSummary s = generate_dataset(cfg, o.out, resolve_jobs(o.jobs));
  std::cout << "generated " << s.scenes << " scenes, " << s.images << " images, " << s.gt_instances
            << " ground-truth instances in " << o.out << "\n";
  return kExitOk;
}

int cmd_validate(const Options& o) {
  const bop::ValidationReport rep = bop::validate_dataset(o.dataset);
  if (o.format == "json") {
    nlohmann::ordered_json j;
    j["scenes_checked"] = rep.scenes_checked;
    j["images_checked"] = rep.images_checked;
    j["violations"] = nlohmann::ordered_json::array();
    for (const auto& v : rep.violations)
      j["violations"].push_back({{"path", v.path}, {"im_id", v.im_id}, {"message", v.message}});
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "checked " << rep.scenes_checked << " scenes, " << rep.images_checked << " images\n";
    for (const auto& v : rep.violations)
      std::cout << v.path << (v.im_id >= 0 ? " [im " + std::to_string(v.im_id) + "]" : "") << ": " << v.message
                << "\n";
    std::cout << rep.violations.size() << " violation(s)\n";
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  const DatasetGroundTruth gt = collect_ground_truth(o.dataset);
  const ModelLibrary models = load_model_library(models_dir_for(o), o.points, o.seed.value_or(0));
  const auto rows = bop::read_results(o.results);
  const Evaluation ev = evaluate_results(gt, rows, models, EvaluationOptions{o.thresholds, parse_metric(o.metric)});
  emit(o.format == "json" ? metrics_json(ev.report).dump(2) + "\n" : metrics_table(ev.report), o.out);
  return kExitOk;
}

int cmd_bench(const Options& o) {
  const DatasetGroundTruth gt = collect_ground_truth(o.dataset);
  const ModelLibrary models = load_model_library(models_dir_for(o), o.points, o.seed.value_or(0));
  const auto rows = o.results.empty() ? bop::ground_truth_as_results(locate_dataset(o.dataset).scenes)
                                      : bop::read_results(o.results);
  TimedOptions topt;
  topt.evaluation = EvaluationOptions{o.thresholds, parse_metric(o.metric)};
  topt.nms_iou = o.nms_iou;
  const TimedEvaluation te = timed_evaluate(gt, rows, models, topt);
  if (o.format == "json") {
    nlohmann::ordered_json j;
    j["timing"] = timing_json(te.timing);
    j["metrics"] = metrics_json(te.evaluation.report);
    emit(j.dump(2) + "\n", o.out);
  } else {
    emit(timing_table(te.timing) + metrics_table(te.evaluation.report), o.out);
  }
  return kExitOk;
}

int cmd_selftest(const Options& o) {
  SelfTestOptions so;
  so.seed = o.seed.value_or(0);
  so.trials = o.trials;
  const auto entries = run_loss_selftest(so);
  bool ok = true;
  if (o.format == "json") {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& e : entries)
      j.push_back({{"loss", e.name},
                   {"trials", e.trials},
                   {"resampled", e.resampled},
                   {"max_deviation", e.max_deviation},
                   {"zero_at_ground_truth", e.zero_at_ground_truth},
                   {"passed", e.passed}});
    std::cout << j.dump(2) << "\n";
  }
  for (const auto& e : entries) {
    ok = ok && e.passed;
    if (o.format != "json")
      std::cout << (e.passed ? "PASS " : "FAIL ") << e.name << ": max deviation " << e.max_deviation << " over "
                << e.trials << " configurations (" << e.resampled << " singular resampled), zero at GT "
                << (e.zero_at_ground_truth ? "yes" : "no") << "\n";
  }
  return ok ? kExitOk : kExitData;
}

// Augments every image of every scene under --dataset. The augmented tree is
// written under --out (same relative layout) or over the input when --out is absent.
int cmd_augment(const Options& o) {
  const DatasetLocation loc = locate_dataset(o.dataset);
  const fs::path in_root = fs::path(o.dataset);
  const fs::path out_root = o.out.empty() ? in_root : fs::path(o.out);
  const std::uint64_t seed = o.seed.value_or(0);

  const bool root_layout = loc.scenes != in_root;  // dataset root with train/
  if (root_layout && out_root != in_root) {
    bop::detail::ensure_dir(out_root);
    if (loc.camera_json) fs::copy_file(*loc.camera_json, out_root / "camera.json", fs::copy_options::overwrite_existing);
    if (loc.models && fs::is_directory(in_root / "models"))
      fs::copy(in_root / "models", out_root / "models", fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  }
  const auto scenes = bop::list_scenes(loc.scenes);
  const bool single_scene = scenes.size() == 1 && scenes.front().second == loc.scenes;

  std::size_t n_images = 0;
  for (const auto& [scene_id, scene_dir] : scenes) {
    fs::path dst;
    if (single_scene) dst = out_root;
    else if (root_layout) dst = out_root / "train" / scene_dir.filename();
    else dst = out_root / scene_dir.filename();

    const bop::Scene in = bop::read_scene(scene_dir, bop::ReadOptions{true});
    bop::Scene out;
    std::map<int, bop::ImageSet> images;
    for (const auto& [im_id, entries] : in.gt) {
      bop::ImageSet src;
      src.rgb = read_png(bop::rgb_path(scene_dir, im_id));
      src.depth = read_png16(bop::depth_path(scene_dir, im_id));
      const bop::CameraEntry& cam = in.camera.at(im_id);
      const CameraIntrinsics k = cam.intrinsics(src.rgb.width, src.rgb.height);

      Rng geo_rng = derive_stream(seed, {static_cast<std::uint64_t>(scene_id), static_cast<std::uint64_t>(im_id), 0});
      Rng color_rng = derive_stream(seed, {static_cast<std::uint64_t>(scene_id), static_cast<std::uint64_t>(im_id), 1});
      const AugmentationParams p = sample_params(geo_rng);
      const ColorJitterParams cj = o.no_color ? ColorJitterParams{} : sample_color_jitter(color_rng);

      bop::ImageSet dst_set;
      dst_set.rgb = apply_color_jitter(apply_to_image(src.rgb, p, k), cj);
      dst_set.depth = warp_nearest(src.depth, p, k, 1.0 / p.scale);
      std::vector<bop::GtEntry> gt;
      std::vector<bop::GtInfoEntry> info;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const ImageU8 mask = warp_nearest(read_png(bop::mask_path(scene_dir, im_id, i)), p, k);
        const ImageU8 visib = warp_nearest(read_png(bop::mask_visib_path(scene_dir, im_id, i)), p, k);
        const double vf = visibility_fraction(visib, mask);
        if (!(vf > 0.0)) continue;
        gt.push_back(bop::GtEntry::from_pose(entries[i].obj_id, apply_to_pose(entries[i].pose(), p, k)));
        bop::GtInfoEntry e;
        e.bbox_obj = mask_bbox(mask);
        e.bbox_visib = mask_bbox(visib);
        e.px_count_all = static_cast<long>(count_nonzero(mask));
        long valid = 0;
        for (std::size_t px = 0; px < mask.data.size(); ++px)
          if (mask.data[px] && dst_set.depth.data[px]) ++valid;
        e.px_count_valid = valid;
        e.px_count_visib = static_cast<long>(count_nonzero(visib));
        e.visib_fract = vf;
        info.push_back(e);
        dst_set.masks.push_back(mask);
        dst_set.masks_visib.push_back(visib);
      }
      bop::CameraEntry out_cam;
      out_cam.cam_K = cam.cam_K;
      out_cam.depth_scale = cam.depth_scale;
      out.camera[im_id] = out_cam;
      out.gt[im_id] = std::move(gt);
      out.gt_info[im_id] = std::move(info);
      images[im_id] = std::move(dst_set);
      ++n_images;
    }
    if (dst == scene_dir) {
      // stale masks of dropped instances must not survive an in-place rewrite
      for (const char* sub : {"mask", "mask_visib"}) fs::remove_all(dst / sub);
    }
    bop::write_scene(dst, out, &images);
  }
  std::cout << "augmented " << n_images << " images in " << scenes.size() << " scenes into " << out_root.string()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose_forge: synthetic BOP datasets, 6D pose metrics, losses and augmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pose_forge 1.0.0");
  Options o;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed"); };
  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  };
  auto add_eval = [&](CLI::App* c) {
    c->add_option("--dataset", o.dataset, "Dataset root, split or scene directory")->required();
    c->add_option("--models", o.models, "Directory with obj_NNNNNN.ply (default: models/ next to the dataset)");
    c->add_option("--thresholds", o.thresholds, "Diameter fractions, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    c->add_option("--points", o.points, "Evaluation points per model (0 = raw mesh vertices)")->capture_default_str();
    c->add_option("--metric", o.metric, "Pose error metric")->check(CLI::IsMember({"adds", "add"}))->capture_default_str();
    c->add_option("--out", o.out, "Write the report to this file instead of stdout");
    add_seed(c);
    add_format(c);
  };

  CLI::App* gen = app.add_subcommand("generate", "Generate a synthetic BOP dataset from a scene config");
  gen->add_option("--config", o.config, "Scene config (JSON)")->required();
  gen->add_option("--out", o.out, "Output dataset root")->required();
  gen->add_option("--scenes", o.scenes, "Override the config's scene count");
  gen->add_option("--jobs", o.jobs, "Worker threads (default: POSE_FORGE_JOBS or all cores)");
  add_seed(gen);

  CLI::App* val = app.add_subcommand("validate", "Check a BOP dataset and list every violation");
  val->add_option("--dataset", o.dataset, "Dataset root, split or scene directory")->required();
  add_format(val);

  CLI::App* ev = app.add_subcommand("evaluate", "Score a BOP results CSV against ground truth");
  ev->add_option("--results", o.results, "BOP results CSV")->required();
  add_eval(ev);

  CLI::App* bench = app.add_subcommand("bench", "Time decode, NMS and matching over a results file");
  bench->add_option("--results", o.results, "BOP results CSV (default: ground truth as predictions)");
  bench->add_option("--nms-iou", o.nms_iou, "NMS IoU threshold in (0,1]")->capture_default_str();
  add_eval(bench);

  CLI::App* aug = app.add_subcommand("augment", "Write a geometrically and color augmented copy of a dataset");
  aug->add_option("--dataset", o.dataset, "Dataset root, split or scene directory")->required();
  aug->add_option("--out", o.out, "Output directory (default: overwrite the input)");
  aug->add_flag("--no-color", o.no_color, "Skip HSV color jitter");
  add_seed(aug);

  CLI::App* losses = app.add_subcommand("losses", "Loss utilities");
  losses->require_subcommand(1);
  CLI::App* selftest = losses->add_subcommand("selftest", "Finite-difference gradient checks of every loss");
  selftest->add_option("--trials", o.trials, "Configurations per loss")->capture_default_str();
  add_seed(selftest);
  add_format(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*bench || *ev) check_thresholds(o.thresholds);
    if (*bench && !(o.nms_iou > 0.0 && o.nms_iou <= 1.0)) throw UsageError("--nms-iou must lie in (0,1]");
    if (*gen) return cmd_generate(o);
    if (*val) return cmd_validate(o);
    if (*ev) return cmd_evaluate(o);
    if (*bench) return cmd_bench(o);
    if (*aug) return cmd_augment(o);
    if (*selftest) return cmd_selftest(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
