#pragma once

// PNG read/write via libpng: 8-bit gray/RGB and 16-bit gray.

#include <png.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "poseforge/error.hpp"
#include "poseforge/image.hpp"

namespace poseforge {

namespace detail::png {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline bool write_rows(std::FILE* fp, int w, int h, int bit_depth, int color_type,
                       std::vector<png_bytep>& rows, bool swap16) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (swap16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct Decoded {
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<unsigned char> bytes;
  std::size_t rowbytes = 0;
};

// rows lives in the caller so that a longjmp out of libpng leaks nothing.
inline bool read_rows(std::FILE* fp, Decoded& out, std::vector<png_bytep>& rows, bool swap16) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (out.color_type == PNG_COLOR_TYPE_GRAY && out.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (out.bit_depth == 16 && swap16) png_set_swap(png);
  png_read_update_info(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  out.rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(out.rowbytes * out.height);
  rows.resize(out.height);
  for (png_uint_32 y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + y * out.rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline Decoded decode_file(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  Decoded d;
  std::vector<png_bytep> rows;
  if (!read_rows(fp.get(), d, rows, true)) throw Error(ErrorCode::IoError, "invalid PNG " + path.string());
  return d;
}

inline int channels_of(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return 1;
    case PNG_COLOR_TYPE_GRAY_ALPHA: return 2;
    case PNG_COLOR_TYPE_RGB: return 3;
    case PNG_COLOR_TYPE_RGB_ALPHA: return 4;
  }
  return 0;
}

}  // namespace detail::png

/// Writes a 1-channel (gray) or 3-channel (RGB) 8-bit image.
inline void write_png(const std::filesystem::path& path, const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw Error(ErrorCode::IoError, "8-bit PNG needs 1 or 3 channels");
  detail::png::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * img.channels);
  const int type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  if (!detail::png::write_rows(fp.get(), img.width, img.height, 8, type, rows, false))
    throw Error(ErrorCode::IoError, "PNG encoding failed for " + path.string());
}

/// Writes a 16-bit single-channel image.
inline void write_png16(const std::filesystem::path& path, const ImageU16& img) {
  if (img.channels != 1) throw Error(ErrorCode::IoError, "16-bit PNG must be single channel");
  detail::png::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(
        img.data.data() + static_cast<std::size_t>(y) * img.width));
  if (!detail::png::write_rows(fp.get(), img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, rows, true))
    throw Error(ErrorCode::IoError, "PNG encoding failed for " + path.string());
}

/// Reads an 8-bit PNG; alpha is dropped, palettes expanded.
inline ImageU8 read_png(const std::filesystem::path& path) {
  auto d = detail::png::decode_file(path);
  if (d.bit_depth != 8) throw Error(ErrorCode::IoError, path.string() + " is not an 8-bit PNG");
  const int src_c = detail::png::channels_of(d.color_type);
  const int dst_c = src_c >= 3 ? 3 : 1;
  ImageU8 img(static_cast<int>(d.width), static_cast<int>(d.height), dst_c);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < dst_c; ++c)
        img.at(x, y, c) = d.bytes[y * d.rowbytes + static_cast<std::size_t>(x) * src_c + c];
  return img;
}

inline ImageU16 read_png16(const std::filesystem::path& path) {
  auto d = detail::png::decode_file(path);
  if (d.bit_depth != 16 || d.color_type != PNG_COLOR_TYPE_GRAY)
    throw Error(ErrorCode::IoError, path.string() + " is not a 16-bit grayscale PNG");
  ImageU16 img(static_cast<int>(d.width), static_cast<int>(d.height), 1);
  for (int y = 0; y < img.height; ++y)
    std::memcpy(img.data.data() + static_cast<std::size_t>(y) * img.width,
                d.bytes.data() + y * d.rowbytes, static_cast<std::size_t>(img.width) * 2);
  return img;
}

struct PngHeader {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

/// Reads only the IHDR chunk.
inline PngHeader read_png_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::array<unsigned char, 26> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() < 26 || std::memcmp(buf.data(), kSig, 8) != 0 ||
      std::memcmp(buf.data() + 12, "IHDR", 4) != 0)
    throw Error(ErrorCode::IoError, path.string() + " is not a PNG file");
  auto be32 = [&](int o) {
    return (static_cast<int>(buf[o]) << 24) | (buf[o + 1] << 16) | (buf[o + 2] << 8) | buf[o + 3];
  };
  return PngHeader{be32(16), be32(20), buf[24], buf[25]};
}

}  // namespace poseforge
