#pragma once

// Triangle meshes, surface point sets and the object diameter d_m.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poseforge/convex_hull.hpp"
#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/random.hpp"

namespace poseforge {

using Face = std::array<int, 3>;

/// Points are the units of both the ADD(-S) metric and loss.
struct PointSet {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Vec3& operator[](std::size_t i) const { return points[i]; }
};

namespace detail {

inline double point_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double exhaustive_diameter(std::span<const Vec3> pts, std::span<const int> subset) {
  double best = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i)
    for (std::size_t j = i + 1; j < subset.size(); ++j)
      best = std::max(best, point_distance(pts[subset[i]], pts[subset[j]]));
  return best;
}

}  // namespace detail

inline constexpr std::size_t kExhaustiveDiameterLimit = 5000;

/// Maximum pairwise distance. Exhaustive up to 5000 points; above that the
/// search is restricted to convex-hull candidates, which yields the same value.
inline double points_diameter(std::span<const Vec3> pts) {
  if (pts.size() < 2)
    throw Error(ErrorCode::TooFewVertices, "diameter needs at least 2 points, got " +
                                               std::to_string(pts.size()));
  std::vector<int> subset;
  if (pts.size() > kExhaustiveDiameterLimit) {
    if (auto cand = detail::QuickHull(pts).extreme_candidates()) subset = std::move(*cand);
  }
  if (subset.empty()) {
    subset.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) subset[i] = static_cast<int>(i);
  }
  return detail::exhaustive_diameter(pts, subset);
}

class Mesh {
 public:
  Mesh() = default;

  Mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
      : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    for (const auto& f : faces_)
      for (int idx : f)
        if (idx < 0 || static_cast<std::size_t>(idx) >= vertices_.size())
          throw Error(ErrorCode::ParseError, "face index " + std::to_string(idx) +
                                                 " out of range for " +
                                                 std::to_string(vertices_.size()) + " vertices");
    diameter_ = vertices_.size() >= 2 ? points_diameter(vertices_) : 0.0;
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  /// mm, max pairwise vertex distance (0 for fewer than 2 vertices)
  double diameter() const { return diameter_; }

  /// Radius of the smallest origin-centred sphere containing every vertex.
  double origin_radius() const {
    double r = 0.0;
    for (const auto& v : vertices_) r = std::max(r, v.norm());
    return r;
  }

  PointSet vertex_points() const { return PointSet{vertices_}; }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  double diameter_ = 0.0;
};

inline double mesh_diameter(const Mesh& mesh) {
  if (mesh.vertices().size() < 2)
    throw Error(ErrorCode::TooFewVertices, "mesh has fewer than 2 vertices");
  return mesh.diameter();
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

/// Area-weighted uniform surface samples; deterministic for a given seed.
inline PointSet sample_points(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.faces().empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no faces");
  if (n == 0) throw Error(ErrorCode::EmptyPointSet, "requested 0 samples");
  const auto& v = mesh.vertices();
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces().size());
  double total = 0.0;
  for (const auto& f : mesh.faces()) {
    total += triangle_area(v[f[0]], v[f[1]], v[f[2]]);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMesh, "mesh has zero surface area");

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointSet out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    // zero-area faces repeat the previous cumulative sum and are never picked
    const Face& f = mesh.faces()[static_cast<std::size_t>(it - cumulative.begin())];
    const double s = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const double w0 = 1.0 - s, w1 = s * (1.0 - r2), w2 = s * r2;
    out.points.push_back(w0 * v[f[0]] + w1 * v[f[1]] + w2 * v[f[2]]);
  }
  return out;
}

/// Default evaluation point count when sampling instead of using raw vertices.
inline constexpr std::size_t kDefaultEvalPoints = 2048;

}  // namespace poseforge
