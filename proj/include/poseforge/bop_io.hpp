#pragma once

// BOP dataset layout: per-scene scene_gt.json / scene_camera.json /
// scene_gt_info.json plus rgb/, depth/, mask/, mask_visib/ PNGs, the
// dataset-level camera.json, and the BOP-challenge results CSV.
//
// Serialization is deterministic: keys in ascending numeric order, doubles
// in shortest round-trip form, so write(read(x)) reproduces x byte for byte.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/image.hpp"
#include "poseforge/png_io.hpp"
#include "poseforge/text.hpp"

namespace poseforge::bop {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline constexpr double kDefaultDepthScale = 0.1;  // mm per depth unit
inline constexpr double kFileRotationTolerance = 1e-4;

struct GtEntry {
  int obj_id = 1;
  std::array<double, 9> cam_R_m2c{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> cam_t_m2c{0, 0, 0};                     // mm

  Pose pose() const {
    Pose p;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) p.rotation(r, c) = cam_R_m2c[3 * r + c];
    p.translation = Vec3(cam_t_m2c[0], cam_t_m2c[1], cam_t_m2c[2]);
    return p;
  }

  static GtEntry from_pose(int obj_id, const Pose& p) {
    GtEntry e;
    e.obj_id = obj_id;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) e.cam_R_m2c[3 * r + c] = p.rotation(r, c);
    e.cam_t_m2c = {p.translation.x(), p.translation.y(), p.translation.z()};
    return e;
  }

  bool operator==(const GtEntry&) const = default;
};

struct CameraEntry {
  std::array<double, 9> cam_K{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  double depth_scale = kDefaultDepthScale;
  std::optional<std::array<double, 9>> cam_R_w2c;
  std::optional<std::array<double, 3>> cam_t_w2c;  // mm

  CameraIntrinsics intrinsics(int width, int height) const {
    return CameraIntrinsics{cam_K[0], cam_K[4], cam_K[2], cam_K[5], width, height};
  }

  bool operator==(const CameraEntry&) const = default;
};

struct GtInfoEntry {
  std::array<int, 4> bbox_obj{-1, -1, -1, -1};    // x, y, w, h
  std::array<int, 4> bbox_visib{-1, -1, -1, -1};  // x, y, w, h
  long px_count_all = 0;
  long px_count_valid = 0;
  long px_count_visib = 0;
  double visib_fract = 0.0;

  bool operator==(const GtInfoEntry&) const = default;
};

struct Scene {
  std::map<int, std::vector<GtEntry>> gt;
  std::map<int, CameraEntry> camera;
  std::map<int, std::vector<GtInfoEntry>> gt_info;

  bool operator==(const Scene&) const = default;
};

/// Rasters for one image; masks are indexed by ground-truth entry.
struct ImageSet {
  ImageU8 rgb;
  ImageU16 depth;
  std::vector<ImageU8> masks;
  std::vector<ImageU8> masks_visib;
};

/// Dataset-level camera.json.
struct DatasetCamera {
  CameraIntrinsics intrinsics;
  double depth_scale = kDefaultDepthScale;
};

inline std::string image_stem(int im_id) { return text::zero_pad(im_id); }
inline std::string mask_stem(int im_id, std::size_t gt_idx) {
  return text::zero_pad(im_id) + "_" + text::zero_pad(static_cast<long long>(gt_idx));
}
inline fs::path rgb_path(const fs::path& scene, int im_id) { return scene / "rgb" / (image_stem(im_id) + ".png"); }
inline fs::path depth_path(const fs::path& scene, int im_id) { return scene / "depth" / (image_stem(im_id) + ".png"); }
inline fs::path mask_path(const fs::path& scene, int im_id, std::size_t gt_idx) {
  return scene / "mask" / (mask_stem(im_id, gt_idx) + ".png");
}
inline fs::path mask_visib_path(const fs::path& scene, int im_id, std::size_t gt_idx) {
  return scene / "mask_visib" / (mask_stem(im_id, gt_idx) + ".png");
}

// ---------------------------------------------------------------- json helpers

namespace detail {

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ordered_json parse_json_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const std::string data = read_text(path);
  try {
    return ordered_json::parse(data);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::JsonError,
                path.string() + " at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

[[noreturn]] inline void schema_error(const fs::path& path, const std::string& where,
                                      const std::string& what) {
  throw Error(ErrorCode::JsonError, path.string() + " [" + where + "]: " + what);
}

template <std::size_t N>
std::array<double, N> number_array(const ordered_json& j, const fs::path& path, const std::string& where) {
  if (!j.is_array() || j.size() != N)
    schema_error(path, where, "expected array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number()) schema_error(path, where, "non-numeric entry");
    out[i] = j[i].get<double>();
  }
  return out;
}

template <std::size_t N>
std::array<int, N> int_array(const ordered_json& j, const fs::path& path, const std::string& where) {
  if (!j.is_array() || j.size() != N)
    schema_error(path, where, "expected array of " + std::to_string(N) + " integers");
  std::array<int, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number_integer()) schema_error(path, where, "non-integer entry");
    out[i] = j[i].get<int>();
  }
  return out;
}

inline const ordered_json& field(const ordered_json& obj, const char* key, const fs::path& path,
                                 const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) schema_error(path, where, std::string("missing '") + key + "'");
  return obj.at(key);
}

inline int image_key(const std::string& key, const fs::path& path) {
  auto v = text::parse_int<int>(key);
  if (!v || *v < 0) schema_error(path, key, "image key is not a non-negative integer");
  return *v;
}

template <typename T, std::size_t N>
ordered_json to_json_array(const std::array<T, N>& a) {
  ordered_json j = ordered_json::array();
  for (const auto& v : a) j.push_back(v);
  return j;
}

inline void write_text(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::NonWritableDir, dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".poseforge_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::NonWritableDir, dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace detail

// ------------------------------------------------------------- serialization

inline std::string serialize_scene_gt(const Scene& s) {
  ordered_json root = ordered_json::object();
  for (const auto& [im_id, entries] : s.gt) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : entries) {
      ordered_json o;
      o["cam_R_m2c"] = detail::to_json_array(e.cam_R_m2c);
      o["cam_t_m2c"] = detail::to_json_array(e.cam_t_m2c);
      o["obj_id"] = e.obj_id;
      arr.push_back(std::move(o));
    }
    root[std::to_string(im_id)] = std::move(arr);
  }
  return detail::dump(root);
}

inline std::string serialize_scene_camera(const Scene& s) {
  ordered_json root = ordered_json::object();
  for (const auto& [im_id, c] : s.camera) {
    ordered_json o;
    o["cam_K"] = detail::to_json_array(c.cam_K);
    if (c.cam_R_w2c) o["cam_R_w2c"] = detail::to_json_array(*c.cam_R_w2c);
    if (c.cam_t_w2c) o["cam_t_w2c"] = detail::to_json_array(*c.cam_t_w2c);
    o["depth_scale"] = c.depth_scale;
    root[std::to_string(im_id)] = std::move(o);
  }
  return detail::dump(root);
}

inline std::string serialize_scene_gt_info(const Scene& s) {
  ordered_json root = ordered_json::object();
  for (const auto& [im_id, entries] : s.gt_info) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : entries) {
      ordered_json o;
      o["bbox_obj"] = detail::to_json_array(e.bbox_obj);
      o["bbox_visib"] = detail::to_json_array(e.bbox_visib);
      o["px_count_all"] = e.px_count_all;
      o["px_count_valid"] = e.px_count_valid;
      o["px_count_visib"] = e.px_count_visib;
      o["visib_fract"] = e.visib_fract;
      arr.push_back(std::move(o));
    }
    root[std::to_string(im_id)] = std::move(arr);
  }
  return detail::dump(root);
}

/// Writes the annotation files and, when given, the per-image rasters.
inline void write_scene(const fs::path& dir, const Scene& scene,
                        const std::map<int, ImageSet>* images = nullptr) {
  detail::ensure_dir(dir);
  detail::write_text(dir / "scene_gt.json", serialize_scene_gt(scene));
  detail::write_text(dir / "scene_camera.json", serialize_scene_camera(scene));
  detail::write_text(dir / "scene_gt_info.json", serialize_scene_gt_info(scene));
  if (!images) return;
  for (const char* sub : {"rgb", "depth", "mask", "mask_visib"}) detail::ensure_dir(dir / sub);
  for (const auto& [im_id, set] : *images) {
    write_png(rgb_path(dir, im_id), set.rgb);
    write_png16(depth_path(dir, im_id), set.depth);
    for (std::size_t i = 0; i < set.masks.size(); ++i) write_png(mask_path(dir, im_id, i), set.masks[i]);
    for (std::size_t i = 0; i < set.masks_visib.size(); ++i)
      write_png(mask_visib_path(dir, im_id, i), set.masks_visib[i]);
  }
}

struct ReadOptions {
  /// Also require every referenced rgb/depth/mask file to exist.
  bool check_files = false;
};

inline Scene read_scene(const fs::path& dir, const ReadOptions& opt = {}) {
  Scene scene;
  const fs::path gt_file = dir / "scene_gt.json";
  const fs::path cam_file = dir / "scene_camera.json";
  const fs::path info_file = dir / "scene_gt_info.json";

  const ordered_json gt = detail::parse_json_file(gt_file);
  const ordered_json cam = detail::parse_json_file(cam_file);
  if (!gt.is_object()) detail::schema_error(gt_file, "root", "expected object keyed by image id");
  if (!cam.is_object()) detail::schema_error(cam_file, "root", "expected object keyed by image id");

  for (const auto& [key, value] : cam.items()) {
    const int im_id = detail::image_key(key, cam_file);
    CameraEntry c;
    c.cam_K = detail::number_array<9>(detail::field(value, "cam_K", cam_file, key), cam_file, key + ".cam_K");
    if (value.contains("depth_scale")) {
      if (!value["depth_scale"].is_number()) detail::schema_error(cam_file, key, "depth_scale not numeric");
      c.depth_scale = value["depth_scale"].get<double>();
    }
    if (value.contains("cam_R_w2c"))
      c.cam_R_w2c = detail::number_array<9>(value["cam_R_w2c"], cam_file, key + ".cam_R_w2c");
    if (value.contains("cam_t_w2c"))
      c.cam_t_w2c = detail::number_array<3>(value["cam_t_w2c"], cam_file, key + ".cam_t_w2c");
    scene.camera[im_id] = c;
  }

  for (const auto& [key, value] : gt.items()) {
    const int im_id = detail::image_key(key, gt_file);
    if (!value.is_array()) detail::schema_error(gt_file, key, "expected array of GT entries");
    std::vector<GtEntry> entries;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const std::string where = key + "[" + std::to_string(i) + "]";
      GtEntry e;
      const auto& oid = detail::field(value[i], "obj_id", gt_file, where);
      if (!oid.is_number_integer() || oid.get<long long>() < 1)
        detail::schema_error(gt_file, where, "obj_id must be a positive integer");
      e.obj_id = oid.get<int>();
      e.cam_R_m2c = detail::number_array<9>(detail::field(value[i], "cam_R_m2c", gt_file, where), gt_file, where);
      e.cam_t_m2c = detail::number_array<3>(detail::field(value[i], "cam_t_m2c", gt_file, where), gt_file, where);
      entries.push_back(e);
    }
    if (!scene.camera.contains(im_id))
      throw Error(ErrorCode::InconsistentKeys,
                  gt_file.string() + ": image " + key + " has no entry in scene_camera.json");
    scene.gt[im_id] = std::move(entries);
  }

  if (fs::exists(info_file)) {
    const ordered_json info = detail::parse_json_file(info_file);
    if (!info.is_object()) detail::schema_error(info_file, "root", "expected object keyed by image id");
    for (const auto& [key, value] : info.items()) {
      const int im_id = detail::image_key(key, info_file);
      if (!value.is_array()) detail::schema_error(info_file, key, "expected array");
      std::vector<GtInfoEntry> entries;
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string where = key + "[" + std::to_string(i) + "]";
        const auto& v = value[i];
        GtInfoEntry e;
        e.bbox_obj = detail::int_array<4>(detail::field(v, "bbox_obj", info_file, where), info_file, where);
        e.bbox_visib = detail::int_array<4>(detail::field(v, "bbox_visib", info_file, where), info_file, where);
        auto count = [&](const char* k) {
          const auto& f = detail::field(v, k, info_file, where);
          if (!f.is_number_integer()) detail::schema_error(info_file, where, std::string(k) + " not integer");
          return f.get<long>();
        };
        e.px_count_all = count("px_count_all");
        e.px_count_valid = count("px_count_valid");
        e.px_count_visib = count("px_count_visib");
        const auto& vf = detail::field(v, "visib_fract", info_file, where);
        if (!vf.is_number()) detail::schema_error(info_file, where, "visib_fract not numeric");
        e.visib_fract = vf.get<double>();
        entries.push_back(e);
      }
      scene.gt_info[im_id] = std::move(entries);
    }
  }

  if (opt.check_files) {
    for (const auto& [im_id, entries] : scene.gt) {
      std::vector<fs::path> needed{rgb_path(dir, im_id), depth_path(dir, im_id)};
      for (std::size_t i = 0; i < entries.size(); ++i) {
        needed.push_back(mask_path(dir, im_id, i));
        needed.push_back(mask_visib_path(dir, im_id, i));
      }
      for (const auto& p : needed)
        if (!fs::exists(p)) throw Error(ErrorCode::MissingFile, p.string());
    }
  }
  return scene;
}

// ------------------------------------------------------------ depth encoding

inline ImageU16 encode_depth(const Image<double>& depth_mm, double depth_scale) {
  if (!(depth_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "depth_scale must be positive");
  ImageU16 out(depth_mm.width, depth_mm.height, 1);
  for (std::size_t i = 0; i < depth_mm.data.size(); ++i) {
    const double units = std::round(depth_mm.data[i] / depth_scale);
    if (!(units >= 0.0) || units > 65535.0)
      throw Error(ErrorCode::InvalidConfig, "depth " + std::to_string(depth_mm.data[i]) +
                                                " mm does not fit 16 bits at depth_scale " +
                                                std::to_string(depth_scale));
    out.data[i] = static_cast<std::uint16_t>(units);
  }
  return out;
}

inline Image<double> decode_depth(const ImageU16& depth, double depth_scale) {
  Image<double> out(depth.width, depth.height, 1);
  for (std::size_t i = 0; i < depth.data.size(); ++i) out.data[i] = depth.data[i] * depth_scale;
  return out;
}

// ------------------------------------------------------- dataset-level files

inline void write_dataset_camera(const fs::path& path, const DatasetCamera& cam) {
  ordered_json j;
  j["cx"] = cam.intrinsics.cx;
  j["cy"] = cam.intrinsics.cy;
  j["depth_scale"] = cam.depth_scale;
  j["fx"] = cam.intrinsics.fx;
  j["fy"] = cam.intrinsics.fy;
  j["height"] = cam.intrinsics.height;
  j["width"] = cam.intrinsics.width;
  detail::write_text(path, detail::dump(j));
}

inline DatasetCamera read_dataset_camera(const fs::path& path) {
  const ordered_json j = detail::parse_json_file(path);
  auto num = [&](const char* k) {
    const auto& f = detail::field(j, k, path, "root");
    if (!f.is_number()) detail::schema_error(path, k, "not numeric");
    return f.get<double>();
  };
  DatasetCamera cam;
  cam.intrinsics.fx = num("fx");
  cam.intrinsics.fy = num("fy");
  cam.intrinsics.cx = num("cx");
  cam.intrinsics.cy = num("cy");
  cam.intrinsics.width = static_cast<int>(num("width"));
  cam.intrinsics.height = static_cast<int>(num("height"));
  if (j.contains("depth_scale")) cam.depth_scale = num("depth_scale");
  cam.intrinsics.validate();
  return cam;
}

struct ModelInfo {
  double diameter = 0.0;
  Vec3 min = Vec3::Zero();
  Vec3 size = Vec3::Zero();
};

inline void write_models_info(const fs::path& path, const std::map<int, ModelInfo>& info) {
  ordered_json root = ordered_json::object();
  for (const auto& [obj_id, m] : info) {
    ordered_json o;
    o["diameter"] = m.diameter;
    o["min_x"] = m.min.x();
    o["min_y"] = m.min.y();
    o["min_z"] = m.min.z();
    o["size_x"] = m.size.x();
    o["size_y"] = m.size.y();
    o["size_z"] = m.size.z();
    root[std::to_string(obj_id)] = std::move(o);
  }
  detail::write_text(path, detail::dump(root));
}

inline std::string model_filename(int obj_id) { return "obj_" + text::zero_pad(obj_id) + ".ply"; }

/// Scene directories (numeric names), ascending. Accepts a scene directory, a
/// split directory, or a dataset root holding camera.json and train/.
inline std::vector<std::pair<int, fs::path>> list_scenes(const fs::path& dir) {
  std::vector<std::pair<int, fs::path>> out;
  fs::path split_dir = dir;
  if (fs::exists(dir / "camera.json") && fs::is_directory(dir / "train")) split_dir = dir / "train";
  if (fs::exists(split_dir / "scene_gt.json")) {
    auto id = text::parse_int<int>(split_dir.filename().string());
    out.emplace_back(id.value_or(0), split_dir);
    return out;
  }
  if (!fs::is_directory(split_dir)) throw Error(ErrorCode::MissingFile, split_dir.string());
  for (const auto& entry : fs::directory_iterator(split_dir)) {
    if (!entry.is_directory()) continue;
    auto id = text::parse_int<int>(entry.path().filename().string());
    if (id && fs::exists(entry.path() / "scene_gt.json")) out.emplace_back(*id, entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --------------------------------------------------------------- results csv

struct ResultRow {
  int scene_id = 0;
  int im_id = 0;
  int obj_id = 0;
  double score = 1.0;
  std::array<double, 9> R{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> t{0, 0, 0};                     // mm
  double time = -1.0;                                   // s, -1 when unknown

  Pose pose() const { return GtEntry{obj_id, R, t}.pose(); }
  bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* kResultsHeader = "scene_id,im_id,obj_id,score,R,t,time";

namespace detail {

template <std::size_t N>
std::array<double, N> parse_vector_cell(std::string_view cell, std::size_t line_no, const char* name) {
  auto tok = text::split_whitespace(cell);
  if (tok.size() != N)
    throw Error(ErrorCode::FieldCountError, "line " + std::to_string(line_no) + ": " + name + " has " +
                                                std::to_string(tok.size()) + " values, expected " +
                                                std::to_string(N));
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    auto v = text::parse_double(tok[i]);
    if (!v) throw Error(ErrorCode::CsvError, "line " + std::to_string(line_no) + ": bad number in " + name);
    if (!std::isfinite(*v))
      throw Error(ErrorCode::NonFiniteNumber, "line " + std::to_string(line_no) + ": " + name);
    out[i] = *v;
  }
  return out;
}

}  // namespace detail

inline std::vector<ResultRow> parse_results(const std::string& data) {
  std::vector<ResultRow> rows;
  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::split_whitespace(line).empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char c : line)
        if (c != ' ') compact += c;
      if (compact != kResultsHeader)
        throw Error(ErrorCode::CsvError, "line " + std::to_string(line_no) + ": expected header '" +
                                             kResultsHeader + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cells;
    std::string_view sv(line);
    std::size_t start = 0;
    for (;;) {
      auto comma = sv.find(',', start);
      cells.push_back(sv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 7)
      throw Error(ErrorCode::CsvError, "line " + std::to_string(line_no) + ": expected 7 columns, got " +
                                           std::to_string(cells.size()));
    ResultRow r;
    auto int_cell = [&](std::string_view c, const char* name) {
      auto v = text::parse_int<int>(c);
      if (!v) throw Error(ErrorCode::CsvError, "line " + std::to_string(line_no) + ": bad " + name);
      return *v;
    };
    auto num_cell = [&](std::string_view c, const char* name) {
      auto v = text::parse_double(c);
      if (!v) throw Error(ErrorCode::CsvError, "line " + std::to_string(line_no) + ": bad " + name);
      if (!std::isfinite(*v))
        throw Error(ErrorCode::NonFiniteNumber, "line " + std::to_string(line_no) + ": " + name);
      return *v;
    };
    r.scene_id = int_cell(cells[0], "scene_id");
    r.im_id = int_cell(cells[1], "im_id");
    r.obj_id = int_cell(cells[2], "obj_id");
    r.score = num_cell(cells[3], "score");
    if (r.score < 0.0 || r.score > 1.0)
      throw Error(ErrorCode::CsvError, "line " + std::to_string(line_no) + ": score outside [0,1]");
    r.R = detail::parse_vector_cell<9>(cells[4], line_no, "R");
    r.t = detail::parse_vector_cell<3>(cells[5], line_no, "t");
    r.time = num_cell(cells[6], "time");
    rows.push_back(r);
  }
  return rows;
}

/// A zero-byte file is read as an empty result set.
inline std::vector<ResultRow> read_results(const fs::path& path) {
  return parse_results(detail::read_text(path));
}

inline std::string serialize_results(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultsHeader) + "\n";
  auto join = [](const auto& arr) {
    std::string s;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (i) s += ' ';
      s += text::format_double(arr[i]);
    }
    return s;
  };
  for (const auto& r : rows) {
    for (double v : r.R)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteNumber, "R");
    for (double v : r.t)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteNumber, "t");
    out += std::to_string(r.scene_id) + "," + std::to_string(r.im_id) + "," + std::to_string(r.obj_id) +
           "," + text::format_double(r.score) + "," + join(r.R) + "," + join(r.t) + "," +
           text::format_double(r.time) + "\n";
  }
  return out;
}

inline void write_results(const fs::path& path, const std::vector<ResultRow>& rows) {
  detail::write_text(path, serialize_results(rows));
}

/// Ground truth of every scene under split_dir as score-1 result rows.
inline std::vector<ResultRow> ground_truth_as_results(const fs::path& split_dir) {
  std::vector<ResultRow> rows;
  for (const auto& [scene_id, dir] : list_scenes(split_dir)) {
    const Scene s = read_scene(dir);
    for (const auto& [im_id, entries] : s.gt)
      for (const auto& e : entries) rows.push_back(ResultRow{scene_id, im_id, e.obj_id, 1.0, e.cam_R_m2c, e.cam_t_m2c, -1.0});
  }
  return rows;
}

// ---------------------------------------------------------------- validation

struct Violation {
  std::string path;
  int im_id = -1;  // -1 when not tied to an image
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t scenes_checked = 0;
  std::size_t images_checked = 0;

  bool ok() const { return violations.empty(); }
};

namespace detail {

inline void validate_scene(const fs::path& dir, ValidationReport& rep) {
  auto add = [&](const fs::path& p, int im_id, std::string msg) {
    rep.violations.push_back(Violation{p.string(), im_id, std::move(msg)});
  };
  Scene scene;
  try {
    scene = read_scene(dir);
  } catch (const Error& e) {
    add(dir, -1, e.what());
    return;
  }
  ++rep.scenes_checked;

  for (const auto& [im_id, c] : scene.camera) {
    const auto& k = c.cam_K;
    if (std::abs(k[1]) > 1e-9 || std::abs(k[3]) > 1e-9 || std::abs(k[6]) > 1e-9 || std::abs(k[7]) > 1e-9 ||
        std::abs(k[8] - 1.0) > 1e-9 || !(k[0] > 0.0) || !(k[4] > 0.0))
      add(dir / "scene_camera.json", im_id, "cam_K is not a pinhole calibration matrix");
    if (!(c.depth_scale > 0.0)) add(dir / "scene_camera.json", im_id, "depth_scale must be positive");
  }

  for (const auto& [im_id, entries] : scene.gt) {
    ++rep.images_checked;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const Mat3 r = entries[i].pose().rotation;
      if (!is_rotation(r, kFileRotationTolerance))
        add(dir / "scene_gt.json", im_id,
            "entry " + std::to_string(i) + ": cam_R_m2c is not a rotation (residual " +
                std::to_string(orthonormality_residual(r)) + ", det " + std::to_string(r.determinant()) + ")");
      for (double t : entries[i].cam_t_m2c)
        if (!std::isfinite(t)) add(dir / "scene_gt.json", im_id, "entry " + std::to_string(i) + ": non-finite cam_t_m2c");
    }

    auto info_it = scene.gt_info.find(im_id);
    if (info_it == scene.gt_info.end()) {
      add(dir / "scene_gt_info.json", im_id, "image missing from scene_gt_info.json");
    } else {
      if (info_it->second.size() != entries.size())
        add(dir / "scene_gt_info.json", im_id, "entry count differs from scene_gt.json");
      for (std::size_t i = 0; i < info_it->second.size(); ++i) {
        const double vf = info_it->second[i].visib_fract;
        if (!(vf >= 0.0 && vf <= 1.0))
          add(dir / "scene_gt_info.json", im_id, "entry " + std::to_string(i) + ": visib_fract outside [0,1]");
      }
    }

    std::optional<PngHeader> rgb;
    const fs::path rgb_file = rgb_path(dir, im_id);
    if (!fs::exists(rgb_file)) {
      add(rgb_file, im_id, "missing file");
    } else {
      try {
        rgb = read_png_header(rgb_file);
      } catch (const Error& e) {
        add(rgb_file, im_id, e.what());
      }
    }
    auto check_dims = [&](const fs::path& p, int bit_depth) {
      if (!fs::exists(p)) {
        add(p, im_id, "missing file");
        return;
      }
      try {
        const PngHeader h = read_png_header(p);
        if (h.bit_depth != bit_depth)
          add(p, im_id, "expected " + std::to_string(bit_depth) + "-bit PNG, found " + std::to_string(h.bit_depth));
        if (rgb && (h.width != rgb->width || h.height != rgb->height))
          add(p, im_id, "dimensions " + std::to_string(h.width) + "x" + std::to_string(h.height) +
                            " differ from rgb " + std::to_string(rgb->width) + "x" + std::to_string(rgb->height));
      } catch (const Error& e) {
        add(p, im_id, e.what());
      }
    };
    check_dims(depth_path(dir, im_id), 16);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      check_dims(mask_path(dir, im_id, i), 8);
      check_dims(mask_visib_path(dir, im_id, i), 8);
    }
  }
  for (const auto& [im_id, entries] : scene.gt_info)
    if (!scene.gt.contains(im_id)) add(dir / "scene_gt_info.json", im_id, "image absent from scene_gt.json");
}

}  // namespace detail

/// Accepts a single scene directory or a split directory of scenes.
inline ValidationReport validate_dataset(const fs::path& dir) {
  ValidationReport rep;
  std::vector<std::pair<int, fs::path>> scenes;
  try {
    scenes = list_scenes(dir);
  } catch (const Error& e) {
    rep.violations.push_back(Violation{dir.string(), -1, e.what()});
    return rep;
  }
  if (scenes.empty()) rep.violations.push_back(Violation{dir.string(), -1, "no scene directories found"});
  for (const auto& [id, scene_dir] : scenes) detail::validate_scene(scene_dir, rep);
  return rep;
}

}  // namespace poseforge::bop
