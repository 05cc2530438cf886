#pragma once

// 3D quickhull used to shrink the candidate set for exact diameter search.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace poseforge::detail {

class QuickHull {
 public:
  explicit QuickHull(std::span<const Eigen::Vector3d> pts) : pts_(pts) {}

  /// Indices of every point that may be an extreme point: the hull vertices
  /// plus points that landed within a relative 1e-7 of the boundary at any
  /// step. Empty optional when the input is flat or construction lost
  /// consistency; callers then fall back to an exhaustive search.
  std::optional<std::vector<int>> extreme_candidates() {
    if (pts_.size() < 4) return std::nullopt;
    Eigen::Vector3d lo = pts_[0], hi = pts_[0];
    for (const auto& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double scale = (hi - lo).maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
    eps_ = 1e-10 * scale;
    keep_tol_ = 1e-7 * scale;
    if (!initial_simplex()) return std::nullopt;
    if (!expand()) return std::nullopt;
    if (!closed()) return std::nullopt;

    std::vector<char> flag(pts_.size(), 0);
    for (const auto& f : faces_)
      if (f.alive)
        for (int v : f.v) flag[v] = 1;
    for (int i : near_) flag[i] = 1;
    std::vector<int> out;
    for (std::size_t i = 0; i < flag.size(); ++i)
      if (flag[i]) out.push_back(static_cast<int>(i));
    return out;
  }

 private:
  struct Face {
    std::array<int, 3> v{};
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    double d = 0.0;
    std::vector<int> outside;
    bool alive = true;
  };

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  double dist(const Face& f, int i) const { return f.n.dot(pts_[i]) - f.d; }

  bool make_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    Eigen::Vector3d n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    if (!(len > 0.0)) return false;
    f.n = n / len;
    f.d = f.n.dot(pts_[a]);
    const int id = static_cast<int>(faces_.size());
    for (int e = 0; e < 3; ++e) {
      auto [it, inserted] = edges_.emplace(key(f.v[e], f.v[(e + 1) % 3]), id);
      if (!inserted) return false;
    }
    faces_.push_back(std::move(f));
    return true;
  }

  bool initial_simplex() {
    const int n = static_cast<int>(pts_.size());
    std::array<int, 6> ext{0, 0, 0, 0, 0, 0};
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) {
        if (pts_[i][a] < pts_[ext[2 * a]][a]) ext[2 * a] = i;
        if (pts_[i][a] > pts_[ext[2 * a + 1]][a]) ext[2 * a + 1] = i;
      }
    int i0 = ext[0], i1 = ext[1];
    double best = -1.0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) {
        double d = (pts_[ext[a]] - pts_[ext[b]]).squaredNorm();
        if (d > best) best = d, i0 = ext[a], i1 = ext[b];
      }
    const Eigen::Vector3d dir = (pts_[i1] - pts_[i0]).normalized();
    int i2 = -1;
    best = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d w = pts_[i] - pts_[i0];
      double d = (w - w.dot(dir) * dir).norm();
      if (d > best) best = d, i2 = i;
    }
    if (i2 < 0 || best <= keep_tol_) return false;
    Eigen::Vector3d pn = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    int i3 = -1;
    best = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = std::abs(pn.dot(pts_[i] - pts_[i0]));
      if (d > best) best = d, i3 = i;
    }
    if (i3 < 0 || best <= keep_tol_) return false;

    if (pn.dot(pts_[i3] - pts_[i0]) > 0.0) std::swap(i1, i2);
    // i3 now lies below face (i0,i1,i2)
    if (!make_face(i0, i1, i2) || !make_face(i0, i3, i1) || !make_face(i1, i3, i2) ||
        !make_face(i2, i3, i0))
      return false;

    std::vector<int> rest;
    rest.reserve(n);
    for (int i = 0; i < n; ++i)
      if (i != i0 && i != i1 && i != i2 && i != i3) rest.push_back(i);
    std::vector<int> all_faces{0, 1, 2, 3};
    assign(rest, all_faces);
    return true;
  }

  void assign(const std::vector<int>& points, const std::vector<int>& targets) {
    for (int p : points) {
      double best = -HUGE_VAL;
      int best_face = -1;
      for (int fi : targets) {
        double d = dist(faces_[fi], p);
        if (d > best) best = d, best_face = fi;
      }
      if (best > eps_)
        faces_[best_face].outside.push_back(p);
      else if (best > -keep_tol_)
        near_.push_back(p);
    }
  }

  bool expand() {
    std::vector<int> pending;
    for (std::size_t i = 0; i < faces_.size(); ++i) pending.push_back(static_cast<int>(i));
    while (!pending.empty()) {
      const int fi = pending.back();
      pending.pop_back();
      if (!faces_[fi].alive || faces_[fi].outside.empty()) continue;

      int apex = faces_[fi].outside.front();
      double far = dist(faces_[fi], apex);
      for (int p : faces_[fi].outside) {
        double d = dist(faces_[fi], p);
        if (d > far) far = d, apex = p;
      }

      std::vector<int> visible{fi};
      std::vector<char> seen(faces_.size(), 0), is_visible(faces_.size(), 0);
      seen[fi] = is_visible[fi] = 1;
      for (std::size_t k = 0; k < visible.size(); ++k) {
        const Face& f = faces_[visible[k]];
        for (int e = 0; e < 3; ++e) {
          auto it = edges_.find(key(f.v[(e + 1) % 3], f.v[e]));
          if (it == edges_.end()) return false;
          const int nb = it->second;
          if (seen[nb]) continue;
          seen[nb] = 1;
          if (dist(faces_[nb], apex) > eps_) {
            is_visible[nb] = 1;
            visible.push_back(nb);
          }
        }
      }

      std::vector<std::pair<int, int>> horizon;
      std::vector<int> orphans;
      for (int vf : visible) {
        const Face& f = faces_[vf];
        for (int e = 0; e < 3; ++e) {
          const int a = f.v[e], b = f.v[(e + 1) % 3];
          const int nb = edges_.at(key(b, a));
          if (!is_visible[nb]) horizon.emplace_back(a, b);
        }
        for (int p : f.outside)
          if (p != apex) orphans.push_back(p);
      }
      for (int vf : visible) {
        Face& f = faces_[vf];
        f.alive = false;
        f.outside.clear();
        f.outside.shrink_to_fit();
        for (int e = 0; e < 3; ++e) edges_.erase(key(f.v[e], f.v[(e + 1) % 3]));
      }
      std::vector<int> created;
      for (auto [a, b] : horizon) {
        created.push_back(static_cast<int>(faces_.size()));
        if (!make_face(a, b, apex)) return false;
      }
      assign(orphans, created);
      for (int c : created)
        if (!faces_[c].outside.empty()) pending.push_back(c);
    }
    return true;
  }

  bool closed() const {
    int alive = 0;
    for (const auto& f : faces_) {
      if (!f.alive) continue;
      ++alive;
      for (int e = 0; e < 3; ++e)
        if (!edges_.contains(key(f.v[(e + 1) % 3], f.v[e]))) return false;
    }
    return alive >= 4 && edges_.size() == static_cast<std::size_t>(3 * alive);
  }

  std::span<const Eigen::Vector3d> pts_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
  std::vector<int> near_;
  double eps_ = 0.0;
  double keep_tol_ = 0.0;
};

}  // namespace poseforge::detail
