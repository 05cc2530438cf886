#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "poseforge/error.hpp"
#include "poseforge/mesh.hpp"

namespace poseforge {

struct NearestResult {
  std::size_t index = 0;  // into the indexed PointSet
  Vec3 point = Vec3::Zero();
  double distance = 0.0;  // mm
};

/// Static k-d tree over a point set. Under exact distance ties the returned
/// point is whichever the traversal meets first; the distance is unaffected.
class NNIndex {
 public:
  explicit NNIndex(const PointSet& points) : NNIndex(points.points) {}

  explicit NNIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::EmptyPointSet, "cannot index an empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  NearestResult nearest(const Vec3& q) const {
    std::size_t best = order_[0];
    double best_d2 = std::numeric_limits<double>::infinity();
    search(0, q, best, best_d2);
    return NearestResult{best, points_[best], std::sqrt(best_d2)};
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin = 0, end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  static double dist2(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (!(hi[axis] > lo[axis])) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::size_t id, const Vec3& q, std::size_t& best, double& best_d2) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double d2 = dist2(points_[order_[i]], q);
        if (d2 < best_d2) best_d2 = d2, best = order_[i];
      }
      return;
    }
    // left holds coordinates <= split, right holds coordinates >= split
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    search(near, q, best, best_d2);
    if (diff * diff <= best_d2) search(far, q, best, best_d2);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

inline NNIndex build_nn_index(const PointSet& points) { return NNIndex(points); }

inline NearestResult nearest(const NNIndex& index, const Vec3& q) { return index.nearest(q); }

}  // namespace poseforge
