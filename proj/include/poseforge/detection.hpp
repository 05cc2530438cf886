#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "poseforge/error.hpp"
#include "poseforge/geometry.hpp"

namespace poseforge {

/// Axis-aligned box in pixels.
struct BBox {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
  }
};

/// Raw pose-head output: 6D rotation, projected object center and depth.
struct PoseParams {
  Rot6D r6;
  Vec2 center = Vec2::Zero();  // px
  double tz = 1.0;             // mm
};

/// One predicted object instance.
struct Detection {
  int obj_id = 0;
  double score = 0.0;
  BBox bbox;
  PoseParams params;
  std::optional<Pose> decoded;
};

}  // namespace poseforge
