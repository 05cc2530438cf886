#pragma once

// Z-buffer triangle rasterizer producing depth (mm), instance masks and a
// Lambert shading term.
//
// Each pixel is the square [x-0.5, x+0.5] x [y-0.5, y+0.5] around its integer
// center. A triangle covers a pixel when it overlaps that square with positive
// area, and contributes its nearest depth inside the square (1/z is affine in
// screen space, so the nearest point is a vertex of the clipped polygon). A
// pixel therefore never lies behind any surface point that projects into it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/image.hpp"
#include "poseforge/mesh.hpp"

namespace poseforge {

using DepthMap = Image<double>;         // mm, 0 = empty
using MaskMap = Image<std::int32_t>;    // instance id, 0 = background

struct RenderInstance {
  const Mesh* mesh = nullptr;
  Pose pose;  // model -> camera
  std::int32_t id = 1;
};

struct RenderResult {
  DepthMap depth;
  MaskMap mask;
  Image<float> shading;  // |cos| between face normal and viewing ray, 0 on background
};

inline constexpr double kNearPlane = 1.0;  // mm

namespace detail::raster {

struct Polygon {
  std::array<Vec2, 9> v;
  int n = 0;
};

// Keeps the part of poly with sign * (coord(axis) - bound) <= 0.
inline Polygon clip(const Polygon& in, int axis, double bound, double sign) {
  Polygon out;
  for (int i = 0; i < in.n; ++i) {
    const Vec2& a = in.v[i];
    const Vec2& b = in.v[(i + 1) % in.n];
    const double da = sign * (a[axis] - bound), db = sign * (b[axis] - bound);
    if (da <= 0) out.v[out.n++] = a;
    if ((da < 0 && db > 0) || (da > 0 && db < 0)) {
      const double t = da / (da - db);
      Vec2 p = a + t * (b - a);
      p[axis] = bound;
      out.v[out.n++] = p;
    }
  }
  return out;
}

inline double polygon_area(const Polygon& p) {
  double a = 0.0;
  for (int i = 0; i < p.n; ++i) {
    const Vec2& u = p.v[i];
    const Vec2& w = p.v[(i + 1) % p.n];
    a += u.x() * w.y() - w.x() * u.y();
  }
  return std::abs(a) * 0.5;
}

inline constexpr double kMinOverlap = 1e-14;  // px²; excludes pure edge contact

}  // namespace detail::raster

/// Renders instances in order; on exactly equal depth the earlier instance wins.
inline RenderResult rasterize(std::span<const RenderInstance> instances, const CameraIntrinsics& k,
                              bool with_shading = true) {
  k.validate();
  RenderResult out{DepthMap(k.width, k.height, 1, 0.0), MaskMap(k.width, k.height, 1, 0),
                   Image<float>(with_shading ? k.width : 0, with_shading ? k.height : 0, 1, 0.0f)};
  std::vector<double> best_invz(static_cast<std::size_t>(k.width) * k.height, 0.0);

  for (const auto& inst : instances) {
    if (!inst.mesh) continue;
    if (inst.id <= 0) throw Error(ErrorCode::InvalidConfig, "instance ids must be positive");
    const auto& verts = inst.mesh->vertices();
    std::vector<Vec3> cam(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) cam[i] = inst.pose.apply(verts[i]);

    for (const Face& f : inst.mesh->faces()) {
      const Vec3& p0 = cam[f[0]];
      const Vec3& p1 = cam[f[1]];
      const Vec3& p2 = cam[f[2]];
      if (p0.z() < kNearPlane || p1.z() < kNearPlane || p2.z() < kNearPlane) continue;
      const std::array<Vec2, 3> s{project(p0, k), project(p1, k), project(p2, k)};
      const std::array<double, 3> iz{1.0 / p0.z(), 1.0 / p1.z(), 1.0 / p2.z()};
      const double du1 = s[1].x() - s[0].x(), dv1 = s[1].y() - s[0].y();
      const double du2 = s[2].x() - s[0].x(), dv2 = s[2].y() - s[0].y();
      const double det = du1 * dv2 - du2 * dv1;
      if (std::abs(det) < 1e-12) continue;
      const double dz1 = iz[1] - iz[0], dz2 = iz[2] - iz[0];
      const double ga = (dz1 * dv2 - dz2 * dv1) / det;
      const double gb = (du1 * dz2 - du2 * dz1) / det;
      const double gc = iz[0] - ga * s[0].x() - gb * s[0].y();

      float shade = 0.0f;
      if (with_shading) {
        const Vec3 n = (p1 - p0).cross(p2 - p0);
        const Vec3 ray = (p0 + p1 + p2) / 3.0;
        const double nn = n.norm() * ray.norm();
        shade = nn > 0.0 ? static_cast<float>(std::abs(n.dot(ray)) / nn) : 0.0f;
      }

      const double umin = std::min({s[0].x(), s[1].x(), s[2].x()});
      const double umax = std::max({s[0].x(), s[1].x(), s[2].x()});
      const double vmin = std::min({s[0].y(), s[1].y(), s[2].y()});
      const double vmax = std::max({s[0].y(), s[1].y(), s[2].y()});
      const int x0 = std::max(0, static_cast<int>(std::floor(umin + 0.5)));
      const int x1 = std::min(k.width - 1, static_cast<int>(std::floor(umax + 0.5)));
      const int y0 = std::max(0, static_cast<int>(std::floor(vmin + 0.5)));
      const int y1 = std::min(k.height - 1, static_cast<int>(std::floor(vmax + 0.5)));
      if (x0 > x1 || y0 > y1) continue;

      detail::raster::Polygon tri;
      tri.n = 3;
      for (int i = 0; i < 3; ++i) tri.v[i] = s[i];

      for (int y = y0; y <= y1; ++y) {
        const auto row = detail::raster::clip(detail::raster::clip(tri, 1, y - 0.5, -1.0), 1, y + 0.5, 1.0);
        if (row.n < 3) continue;
        for (int x = x0; x <= x1; ++x) {
          const auto cell = detail::raster::clip(detail::raster::clip(row, 0, x - 0.5, -1.0), 0, x + 0.5, 1.0);
          if (cell.n < 3 || detail::raster::polygon_area(cell) <= detail::raster::kMinOverlap) continue;
          double invz = 0.0;
          for (int i = 0; i < cell.n; ++i) invz = std::max(invz, ga * cell.v[i].x() + gb * cell.v[i].y() + gc);
          const std::size_t idx = static_cast<std::size_t>(y) * k.width + x;
          if (invz > best_invz[idx]) {
            best_invz[idx] = invz;
            out.depth.data[idx] = 1.0 / invz;
            out.mask.data[idx] = inst.id;
            if (with_shading) out.shading.data[idx] = shade;
          }
        }
      }
    }
  }
  return out;
}

/// Binary silhouette (255 = object) of one instance rendered alone.
inline ImageU8 render_silhouette(const RenderInstance& inst, const CameraIntrinsics& k) {
  const RenderResult r = rasterize(std::span<const RenderInstance>(&inst, 1), k, false);
  ImageU8 m(k.width, k.height, 1, 0);
  for (std::size_t i = 0; i < r.mask.data.size(); ++i) m.data[i] = r.mask.data[i] ? 255 : 0;
  return m;
}

/// Binary mask (255) of the pixels where instance id wins the z-test.
inline ImageU8 instance_mask(const MaskMap& mask, std::int32_t id) {
  ImageU8 m(mask.width, mask.height, 1, 0);
  for (std::size_t i = 0; i < mask.data.size(); ++i) m.data[i] = mask.data[i] == id ? 255 : 0;
  return m;
}

inline std::size_t count_nonzero(const ImageU8& m) {
  return static_cast<std::size_t>(std::count_if(m.data.begin(), m.data.end(), [](auto v) { return v != 0; }));
}

/// |visible| / |unoccluded|; 0 when the unoccluded mask is empty.
inline double visibility_fraction(const ImageU8& visible, const ImageU8& unoccluded) {
  if (!visible.same_shape(unoccluded))
    throw Error(ErrorCode::DimensionMismatch, "visibility masks differ in shape");
  const std::size_t all = count_nonzero(unoccluded);
  if (all == 0) return 0.0;
  return static_cast<double>(count_nonzero(visible)) / static_cast<double>(all);
}

/// Tight box (x, y, w, h) of the nonzero pixels, all -1 when empty.
inline std::array<int, 4> mask_bbox(const ImageU8& m) {
  int xmin = std::numeric_limits<int>::max(), ymin = xmin, xmax = -1, ymax = -1;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        xmin = std::min(xmin, x), xmax = std::max(xmax, x);
        ymin = std::min(ymin, y), ymax = std::max(ymax, y);
      }
  if (xmax < 0) return {-1, -1, -1, -1};
  return {xmin, ymin, xmax - xmin + 1, ymax - ymin + 1};
}

}  // namespace poseforge
