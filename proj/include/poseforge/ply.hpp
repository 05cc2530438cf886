#pragma once

// PLY reader/writer (ASCII and binary little-endian). Only vertex positions
// and face connectivity are kept; every other property is parsed and skipped.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "poseforge/error.hpp"
#include "poseforge/mesh.hpp"
#include "poseforge/text.hpp"

namespace poseforge {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

namespace detail::ply {

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

inline bool parse_scalar(std::string_view name, Scalar& out) {
  if (name == "char" || name == "int8") out = Scalar::Int8;
  else if (name == "uchar" || name == "uint8") out = Scalar::UInt8;
  else if (name == "short" || name == "int16") out = Scalar::Int16;
  else if (name == "ushort" || name == "uint16") out = Scalar::UInt16;
  else if (name == "int" || name == "int32") out = Scalar::Int32;
  else if (name == "uint" || name == "uint32") out = Scalar::UInt32;
  else if (name == "float" || name == "float32") out = Scalar::Float32;
  else if (name == "double" || name == "float64") out = Scalar::Float64;
  else return false;
  return true;
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

template <typename T>
T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  static_assert(std::endian::native == std::endian::little, "big-endian hosts not supported");
  return v;
}

inline double decode(Scalar s, const unsigned char* p) {
  switch (s) {
    case Scalar::Int8: return load_le<std::int8_t>(p);
    case Scalar::UInt8: return load_le<std::uint8_t>(p);
    case Scalar::Int16: return load_le<std::int16_t>(p);
    case Scalar::UInt16: return load_le<std::uint16_t>(p);
    case Scalar::Int32: return load_le<std::int32_t>(p);
    case Scalar::UInt32: return load_le<std::uint32_t>(p);
    case Scalar::Float32: return load_le<float>(p);
    case Scalar::Float64: return load_le<double>(p);
  }
  return 0.0;
}

[[noreturn]] inline void fail(const std::string& path, const std::string& where,
                              const std::string& what) {
  throw Error(ErrorCode::ParseError, path + " (" + where + "): " + what);
}

class Builder {
 public:
  Builder(const std::string& path, const std::vector<Element>& elements) : path_(path) {
    for (const auto& e : elements) {
      if (e.name == "vertex") {
        vertices_.reserve(e.count);
        for (std::size_t i = 0; i < e.properties.size(); ++i) {
          const auto& p = e.properties[i];
          if (p.name == "x") xyz_[0] = static_cast<int>(i);
          if (p.name == "y") xyz_[1] = static_cast<int>(i);
          if (p.name == "z") xyz_[2] = static_cast<int>(i);
        }
        if (xyz_[0] < 0 || xyz_[1] < 0 || xyz_[2] < 0)
          fail(path, "header", "vertex element lacks x/y/z properties");
      }
      if (e.name == "face") {
        for (std::size_t i = 0; i < e.properties.size(); ++i) {
          const auto& p = e.properties[i];
          if (p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index"))
            face_list_ = static_cast<int>(i);
        }
        if (face_list_ < 0) fail(path, "header", "face element lacks vertex_indices list");
      }
    }
  }

  int xyz(int axis) const { return xyz_[axis]; }
  int face_list() const { return face_list_; }

  void add_vertex(double x, double y, double z) { vertices_.emplace_back(x, y, z); }

  void add_polygon(const std::vector<long long>& idx, const std::string& where) {
    if (idx.size() < 3) fail(path_, where, "face with fewer than 3 vertices");
    for (std::size_t k = 1; k + 1 < idx.size(); ++k)
      faces_.push_back(Face{static_cast<int>(idx[0]), static_cast<int>(idx[k]),
                            static_cast<int>(idx[k + 1])});
  }

  Mesh finish() {
    for (const auto& f : faces_)
      for (int i : f)
        if (i < 0 || static_cast<std::size_t>(i) >= vertices_.size())
          fail(path_, "body", "face index " + std::to_string(i) + " out of range");
    return Mesh(std::move(vertices_), std::move(faces_));
  }

 private:
  std::string path_;
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  int xyz_[3] = {-1, -1, -1};
  int face_list_ = -1;
};

}  // namespace detail::ply

inline Mesh parse_ply(const std::string& data, const std::string& path = "<memory>") {
  using namespace detail::ply;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) -> bool {
    if (pos >= data.size()) return false;
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    line = std::string_view(data).substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };
  auto where = [&] { return "line " + std::to_string(line_no); };

  std::string_view line;
  if (!next_line(line) || line != "ply") fail(path, "line 1", "missing 'ply' magic");

  bool ascii = false;
  bool have_format = false;
  std::vector<Element> elements;
  bool header_done = false;
  while (next_line(line)) {
    auto tok = text::split_whitespace(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) fail(path, where(), "malformed format line");
      if (tok[1] == "ascii") ascii = true;
      else if (tok[1] == "binary_little_endian") ascii = false;
      else if (tok[1] == "binary_big_endian")
        throw Error(ErrorCode::UnsupportedFormat, path + ": binary_big_endian PLY");
      else fail(path, where(), "unknown format '" + std::string(tok[1]) + "'");
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) fail(path, where(), "malformed element line");
      auto count = text::parse_int<std::size_t>(tok[2]);
      if (!count) fail(path, where(), "bad element count");
      elements.push_back(Element{std::string(tok[1]), *count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) fail(path, where(), "property before any element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.is_list = true;
        if (!parse_scalar(tok[2], p.count_type) || !parse_scalar(tok[3], p.type))
          fail(path, where(), "unknown list property type");
        p.name = tok[4];
      } else if (tok.size() == 3) {
        if (!parse_scalar(tok[1], p.type)) fail(path, where(), "unknown property type");
        p.name = tok[2];
      } else {
        fail(path, where(), "malformed property line");
      }
      elements.back().properties.push_back(std::move(p));
    } else {
      fail(path, where(), "unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!header_done) fail(path, where(), "header not terminated by end_header");
  if (!have_format) fail(path, "header", "missing format line");

  Builder builder(path, elements);
  std::vector<double> values;
  std::vector<long long> idx;

  if (ascii) {
    for (const auto& e : elements) {
      const bool is_vertex = e.name == "vertex";
      const bool is_face = e.name == "face";
      for (std::size_t n = 0; n < e.count; ++n) {
        std::string_view row;
        do {
          if (!next_line(row))
            fail(path, "line " + std::to_string(line_no + 1),
                 "unexpected end of file in element '" + e.name + "' (" + std::to_string(n) +
                     " of " + std::to_string(e.count) + " read)");
        } while (text::split_whitespace(row).empty());
        auto tok = text::split_whitespace(row);
        std::size_t t = 0;
        values.assign(e.properties.size(), 0.0);
        for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
          const auto& p = e.properties[pi];
          if (t >= tok.size()) fail(path, where(), "too few values in row");
          if (p.is_list) {
            auto cnt = text::parse_int<long long>(tok[t++]);
            if (!cnt || *cnt < 0) fail(path, where(), "bad list count");
            if (t + *cnt > tok.size()) fail(path, where(), "list shorter than its count");
            if (is_face && static_cast<int>(pi) == builder.face_list()) {
              idx.clear();
              for (long long k = 0; k < *cnt; ++k) {
                auto v = text::parse_int<long long>(tok[t + k]);
                if (!v) fail(path, where(), "bad vertex index");
                idx.push_back(*v);
              }
            }
            t += *cnt;
          } else {
            auto v = text::parse_double(tok[t++]);
            if (!v) fail(path, where(), "bad numeric value '" + std::string(tok[t - 1]) + "'");
            values[pi] = *v;
          }
        }
        if (t != tok.size()) fail(path, where(), "too many values in row");
        if (is_vertex)
          builder.add_vertex(values[builder.xyz(0)], values[builder.xyz(1)], values[builder.xyz(2)]);
        if (is_face) builder.add_polygon(idx, where());
      }
    }
    std::string_view rest;
    while (next_line(rest))
      if (!text::split_whitespace(rest).empty()) fail(path, where(), "trailing data after last element");
  } else {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    const std::size_t size = data.size();
    auto need = [&](std::size_t n) {
      if (pos + n > size)
        fail(path, "byte offset " + std::to_string(pos),
             "truncated binary body (need " + std::to_string(n) + " bytes, " +
                 std::to_string(size - std::min(pos, size)) + " left)");
    };
    for (const auto& e : elements) {
      const bool is_vertex = e.name == "vertex";
      const bool is_face = e.name == "face";
      for (std::size_t n = 0; n < e.count; ++n) {
        values.assign(e.properties.size(), 0.0);
        for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
          const auto& p = e.properties[pi];
          if (p.is_list) {
            need(scalar_size(p.count_type));
            const double cnt_d = decode(p.count_type, bytes + pos);
            pos += scalar_size(p.count_type);
            if (cnt_d < 0) fail(path, "byte offset " + std::to_string(pos), "negative list count");
            const auto cnt = static_cast<std::size_t>(cnt_d);
            need(cnt * scalar_size(p.type));
            if (is_face && static_cast<int>(pi) == builder.face_list()) {
              idx.clear();
              for (std::size_t k = 0; k < cnt; ++k)
                idx.push_back(static_cast<long long>(decode(p.type, bytes + pos + k * scalar_size(p.type))));
            }
            pos += cnt * scalar_size(p.type);
          } else {
            need(scalar_size(p.type));
            values[pi] = decode(p.type, bytes + pos);
            pos += scalar_size(p.type);
          }
        }
        if (is_vertex)
          builder.add_vertex(values[builder.xyz(0)], values[builder.xyz(1)], values[builder.xyz(2)]);
        if (is_face) builder.add_polygon(idx, "byte offset " + std::to_string(pos));
      }
    }
  }
  return builder.finish();
}

inline Mesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ply(ss.str(), path.string());
}

inline std::string serialize_ply(const Mesh& mesh, PlyEncoding encoding) {
  std::string out;
  out += "ply\n";
  out += encoding == PlyEncoding::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(mesh.vertices().size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "element face " + std::to_string(mesh.faces().size()) + "\n";
  out += "property list uchar int vertex_indices\n";
  out += "end_header\n";
  if (encoding == PlyEncoding::Ascii) {
    for (const auto& v : mesh.vertices())
      out += text::format_double(v.x()) + " " + text::format_double(v.y()) + " " +
             text::format_double(v.z()) + "\n";
    for (const auto& f : mesh.faces())
      out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
  } else {
    auto put = [&out](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
    for (const auto& v : mesh.vertices()) {
      const double xyz[3] = {v.x(), v.y(), v.z()};
      put(xyz, sizeof(xyz));
    }
    for (const auto& f : mesh.faces()) {
      const std::uint8_t n = 3;
      const std::int32_t idx[3] = {f[0], f[1], f[2]};
      put(&n, 1);
      put(idx, sizeof(idx));
    }
  }
  return out;
}

inline void write_ply(const std::filesystem::path& path, const Mesh& mesh,
                      PlyEncoding encoding = PlyEncoding::BinaryLittleEndian) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::string data = serialize_ply(mesh, encoding);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace poseforge
