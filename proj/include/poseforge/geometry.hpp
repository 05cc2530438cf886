#pragma once

// Rotation representations, pinhole camera and the decoupled translation
// (projected center + depth) used by the pose head. Lengths are millimetres,
// image coordinates are pixels with integer values at pixel centers.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "poseforge/error.hpp"
#include "poseforge/random.hpp"

namespace poseforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDegenerateTolerance = 1e-9;
inline constexpr double kRotationTolerance = 1e-6;
inline constexpr double kMinProjectableDepth = 1e-9;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rigid object-to-camera transform. translation in mm, camera frame (z forward).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  /// this ∘ other
  Pose compose(const Pose& other) const {
    return Pose{rotation * other.rotation, rotation * other.translation + translation};
  }

  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return Pose{rt, -(rt * translation)};
  }
};

/// First two columns of a rotation matrix, column-major: r[0..3] = col1, r[3..6] = col2.
struct Rot6D {
  std::array<double, 6> r{1, 0, 0, 0, 1, 0};

  Vec3 col1() const { return {r[0], r[1], r[2]}; }
  Vec3 col2() const { return {r[3], r[4], r[5]}; }

  double& operator[](std::size_t i) { return r[i]; }
  double operator[](std::size_t i) const { return r[i]; }

  bool operator==(const Rot6D&) const = default;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw Error(ErrorCode::InvalidIntrinsics, "focal lengths must be positive");
    if (width < 1 || height < 1)
      throw Error(ErrorCode::InvalidIntrinsics, "image size must be at least 1x1");
  }

  /// Row-major 3x3 calibration matrix as stored in BOP cam_K.
  std::array<double, 9> cam_K() const { return {fx, 0, cx, 0, fy, cy, 0, 0, 1}; }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  bool contains(const Vec2& px) const {
    return px.x() >= -0.5 && px.y() >= -0.5 && px.x() < width - 0.5 && px.y() < height - 0.5;
  }
};

/// Weights of the combined pose loss. All default to 1.
struct LossWeights {
  double lambda_adds = 1.0;
  double lambda_rot = 1.0;
  double lambda_oks = 1.0;
  double lambda_ard = 1.0;
};

/// Largest absolute entry of RᵀR − I.
inline double orthonormality_residual(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

inline bool is_rotation(const Mat3& r, double tol = kRotationTolerance) {
  if (!r.allFinite()) return false;
  return orthonormality_residual(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

inline void require_rotation(const Mat3& r, const char* what, double tol = kRotationTolerance) {
  if (!is_rotation(r, tol))
    throw Error(ErrorCode::InvalidRotation,
                std::string(what) + " is not orthonormal with det +1 (residual " +
                    std::to_string(orthonormality_residual(r)) + ")");
}

/// Gram-Schmidt reconstruction of a rotation from its 6D encoding.
inline Mat3 rot6d_to_matrix(const Rot6D& r6) {
  const Vec3 a = r6.col1();
  const Vec3 b = r6.col2();
  const double na = a.norm();
  if (!(na >= kDegenerateTolerance))
    throw Error(ErrorCode::DegenerateRotation, "first column has near-zero norm");
  const Vec3 e1 = a / na;
  const Vec3 residual = b - b.dot(e1) * e1;
  const double nr = residual.norm();
  if (!(nr >= kDegenerateTolerance))
    throw Error(ErrorCode::DegenerateRotation, "columns are parallel");
  const Vec3 e2 = residual / nr;
  const Vec3 e3 = e1.cross(e2);
  Mat3 out;
  out.col(0) = e1;
  out.col(1) = e2;
  out.col(2) = e3;
  return out;
}

inline Rot6D matrix_to_rot6d(const Mat3& r) {
  require_rotation(r, "rotation");
  return Rot6D{{r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)}};
}

inline Vec2 project(const Vec3& p, const CameraIntrinsics& k) {
  if (!(p.z() > kMinProjectableDepth))
    throw Error(ErrorCode::BehindCamera, "point z=" + std::to_string(p.z()) + " mm");
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

/// Inverse of project(): lift a pixel to the 3D point at depth tz.
inline Vec3 recover_translation(const Vec2& center, double tz, const CameraIntrinsics& k) {
  if (!(tz > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "tz=" + std::to_string(tz) + " mm");
  return {(center.x() - k.cx) * tz / k.fx, (center.y() - k.cy) * tz / k.fy, tz};
}

inline Mat3 rot_x(double deg) { return Eigen::AngleAxisd(deg2rad(deg), Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double deg) { return Eigen::AngleAxisd(deg2rad(deg), Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double deg) { return Eigen::AngleAxisd(deg2rad(deg), Vec3::UnitZ()).toRotationMatrix(); }

/// Haar-uniform rotation: Gram-Schmidt of two iid Gaussian columns.
inline Mat3 random_rotation(Rng& rng) {
  for (;;) {
    Rot6D r6;
    for (auto& v : r6.r) v = gaussian(rng);
    if (r6.col1().norm() < 1e-6) continue;
    const Vec3 e1 = r6.col1().normalized();
    if ((r6.col2() - r6.col2().dot(e1) * e1).norm() < 1e-6) continue;
    return rot6d_to_matrix(r6);
  }
}

}  // namespace poseforge
