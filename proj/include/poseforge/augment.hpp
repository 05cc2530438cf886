#pragma once

// Pose-consistent geometric augmentation (in-plane rotation, scale, shift)
// and pose-free HSV color jitter.
//
// The geometric map acts on normalized camera coordinates
// n = ((u - cx)/fx, (v - cy)/fy):  n' = scale * Rot(angle) * n, followed by a
// pixel shift of (shift.x * width, shift.y * height). With fx == fy this is a
// rotation and scaling about the principal point. Rot(angle) is the image-plane
// action of the camera-frame Rz(angle), so poses transform exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>

#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/image.hpp"
#include "poseforge/random.hpp"

namespace poseforge {

struct AugmentationParams {
  double angle = 0.0;           // degrees, in-plane
  Vec2 shift = Vec2::Zero();    // fraction of width / height
  double scale = 1.0;

  bool is_identity() const { return angle == 0.0 && shift.isZero() && scale == 1.0; }
};

/// Magnitude intervals; angle and shift signs are drawn separately.
struct AugmentationRanges {
  std::array<double, 2> angle{0.0, 10.0};
  std::array<double, 2> shift{0.0, 0.10};
  std::array<double, 2> scale{0.9, 1.1};
  bool random_sign = true;

  void validate() const {
    auto check = [](const std::array<double, 2>& r, const char* name, double min_lo) {
      if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || r[0] > r[1] || r[0] < min_lo)
        throw Error(ErrorCode::InvalidRange, std::string(name) + " range is invalid");
    };
    check(angle, "angle", 0.0);
    check(shift, "shift", 0.0);
    check(scale, "scale", 0.0);
    if (!(scale[0] > 0.0)) throw Error(ErrorCode::InvalidRange, "scale must be positive");
  }
};

namespace detail {
// open interval when lo < hi, exactly lo when lo == hi
inline double open_uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  double v;
  do v = uniform(rng, lo, hi);
  while (v == lo);
  return v;
}
}  // namespace detail

inline AugmentationParams sample_params(Rng& rng, const AugmentationRanges& ranges = {}) {
  ranges.validate();
  auto sign = [&] { return ranges.random_sign && coin(rng) ? -1.0 : 1.0; };
  AugmentationParams p;
  p.angle = sign() * detail::open_uniform(rng, ranges.angle[0], ranges.angle[1]);
  p.shift.x() = sign() * detail::open_uniform(rng, ranges.shift[0], ranges.shift[1]);
  p.shift.y() = sign() * detail::open_uniform(rng, ranges.shift[0], ranges.shift[1]);
  p.scale = detail::open_uniform(rng, ranges.scale[0], ranges.scale[1]);
  return p;
}

inline AugmentationParams sample_params(std::uint64_t seed, const AugmentationRanges& ranges = {}) {
  Rng rng(seed);
  return sample_params(rng, ranges);
}

/// Forward pixel map of the geometric augmentation.
inline Vec2 affine_point(const Vec2& px, const AugmentationParams& p, const CameraIntrinsics& k) {
  const double a = deg2rad(p.angle);
  const double c = std::cos(a), s = std::sin(a);
  const double nx = (px.x() - k.cx) / k.fx, ny = (px.y() - k.cy) / k.fy;
  const double rx = p.scale * (c * nx - s * ny), ry = p.scale * (s * nx + c * ny);
  return {k.fx * rx + k.cx + p.shift.x() * k.width, k.fy * ry + k.cy + p.shift.y() * k.height};
}

/// Inverse of affine_point.
inline Vec2 affine_point_inverse(const Vec2& px, const AugmentationParams& p, const CameraIntrinsics& k) {
  const double a = deg2rad(p.angle);
  const double c = std::cos(a), s = std::sin(a);
  const double rx = (px.x() - p.shift.x() * k.width - k.cx) / k.fx / p.scale;
  const double ry = (px.y() - p.shift.y() * k.height - k.cy) / k.fy / p.scale;
  return {k.fx * (c * rx + s * ry) + k.cx, k.fy * (-s * rx + c * ry) + k.cy};
}

inline Pose apply_to_pose(const Pose& pose, const AugmentationParams& p, const CameraIntrinsics& k) {
  if (!(pose.translation.z() > kMinProjectableDepth))
    throw Error(ErrorCode::BehindCamera, "pose translation has tz <= 0");
  if (p.is_identity()) return pose;
  const Vec2 center = affine_point(project(pose.translation, k), p, k);
  Pose out;
  out.rotation = rot_z(p.angle) * pose.rotation;
  out.translation = recover_translation(center, pose.translation.z() / p.scale, k);
  return out;
}

namespace detail {

inline void require_dims(int w, int h, const CameraIntrinsics& k) {
  if (w != k.width || h != k.height)
    throw Error(ErrorCode::DimensionMismatch, "image is " + std::to_string(w) + "x" + std::to_string(h) +
                                                  ", intrinsics expect " + std::to_string(k.width) + "x" +
                                                  std::to_string(k.height));
}

// Snaps coordinates within rounding noise of the source border back inside.
inline bool in_source(double& x, double hi) {
  constexpr double kSlack = 1e-6;
  if (x < -kSlack || x > hi + kSlack) return false;
  x = std::clamp(x, 0.0, hi);
  return true;
}

}  // namespace detail

/// Bilinear warp; pixels mapping outside the source are black.
inline ImageU8 apply_to_image(const ImageU8& img, const AugmentationParams& p, const CameraIntrinsics& k) {
  detail::require_dims(img.width, img.height, k);
  if (p.is_identity()) return img;
  ImageU8 out(img.width, img.height, img.channels, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      Vec2 src = affine_point_inverse(Vec2(x, y), p, k);
      double sx = src.x(), sy = src.y();
      if (!detail::in_source(sx, img.width - 1) || !detail::in_source(sy, img.height - 1)) continue;
      const int x0 = std::min(static_cast<int>(sx), img.width - 1);
      const int y0 = std::min(static_cast<int>(sy), img.height - 1);
      const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
        const double bot = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround((1 - fy) * top + fy * bot), 0L, 255L));
      }
    }
  }
  return out;
}

/// Nearest-neighbour warp for label and depth rasters; value_scale multiplies
/// every sampled value (1/scale for depth).
template <typename T>
Image<T> warp_nearest(const Image<T>& img, const AugmentationParams& p, const CameraIntrinsics& k,
                      double value_scale = 1.0) {
  detail::require_dims(img.width, img.height, k);
  Image<T> out(img.width, img.height, img.channels, T{});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Vec2 src = affine_point_inverse(Vec2(x, y), p, k);
      const long sx = std::lround(src.x()), sy = std::lround(src.y());
      if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
      for (int c = 0; c < img.channels; ++c) {
        const T v = img.at(static_cast<int>(sx), static_cast<int>(sy), c);
        if constexpr (std::is_floating_point_v<T>) {
          out.at(x, y, c) = static_cast<T>(v * value_scale);
        } else {
          const double scaled = std::round(static_cast<double>(v) * value_scale);
          out.at(x, y, c) = static_cast<T>(std::clamp(scaled, static_cast<double>(std::numeric_limits<T>::lowest()),
                                                      static_cast<double>(std::numeric_limits<T>::max())));
        }
      }
    }
  }
  return out;
}

// ------------------------------------------------------------ color jitter

struct ColorJitterParams {
  double hue = 0.0;         // degrees
  double saturation = 1.0;  // factor
  double value = 1.0;       // factor

  bool is_identity() const { return hue == 0.0 && saturation == 1.0 && value == 1.0; }
};

struct ColorJitterRanges {
  std::array<double, 2> hue{-10.0, 10.0};
  std::array<double, 2> saturation{0.7, 1.3};
  std::array<double, 2> value{0.7, 1.3};

  void validate() const {
    auto ok = [](const std::array<double, 2>& r) { return std::isfinite(r[0]) && std::isfinite(r[1]) && r[0] <= r[1]; };
    if (!ok(hue) || !ok(saturation) || !ok(value) || !(saturation[0] > 0.0) || !(value[0] > 0.0))
      throw Error(ErrorCode::InvalidRange, "color jitter range is invalid");
  }
};

inline ColorJitterParams sample_color_jitter(Rng& rng, const ColorJitterRanges& ranges = {}) {
  ranges.validate();
  return {uniform(rng, ranges.hue[0], ranges.hue[1]), uniform(rng, ranges.saturation[0], ranges.saturation[1]),
          uniform(rng, ranges.value[0], ranges.value[1])};
}

/// Per-pixel HSV transform of a 3-channel image; other channel counts pass through.
inline ImageU8 apply_color_jitter(const ImageU8& img, const ColorJitterParams& p) {
  if (img.channels != 3 || p.is_identity()) return img;
  ImageU8 out = img;
  const double sat = std::max(0.0, p.saturation), val = std::max(0.0, p.value);
  for (std::size_t i = 0; i + 2 < img.data.size(); i += 3) {
    const double r = img.data[i] / 255.0, g = img.data[i + 1] / 255.0, b = img.data[i + 2] / 255.0;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
    double h = 0.0;
    if (d > 0.0) {
      if (mx == r) h = 60.0 * std::fmod((g - b) / d, 6.0);
      else if (mx == g) h = 60.0 * ((b - r) / d + 2.0);
      else h = 60.0 * ((r - g) / d + 4.0);
    }
    double s = mx > 0.0 ? d / mx : 0.0;
    double v = mx;

    h = std::fmod(h + p.hue, 360.0);
    if (h < 0.0) h += 360.0;
    s = std::clamp(s * sat, 0.0, 1.0);
    v = std::clamp(v * val, 0.0, 1.0);

    const double c = v * s;
    const double hp = h / 60.0;
    const double xx = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r1 = 0, g1 = 0, b1 = 0;
    switch (static_cast<int>(hp) % 6) {
      case 0: r1 = c, g1 = xx; break;
      case 1: r1 = xx, g1 = c; break;
      case 2: g1 = c, b1 = xx; break;
      case 3: g1 = xx, b1 = c; break;
      case 4: r1 = xx, b1 = c; break;
      default: r1 = c, b1 = xx; break;
    }
    const double m = v - c;
    out.data[i] = static_cast<std::uint8_t>(std::lround((r1 + m) * 255.0));
    out.data[i + 1] = static_cast<std::uint8_t>(std::lround((g1 + m) * 255.0));
    out.data[i + 2] = static_cast<std::uint8_t>(std::lround((b1 + m) * 255.0));
  }
  return out;
}

}  // namespace poseforge
