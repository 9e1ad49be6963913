#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>

namespace coopfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Tangent vectors are ordered rotation-before-translation: xi = (phi, rho).
// All 6x6 covariances and Jacobians use the same block layout.

// Rotation angles within this margin of pi are rejected by the logarithm.
inline constexpr double kAnglePiMargin = 1e-6;
// Below this angle the closed forms switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;

struct AngleNearPiError : std::runtime_error {
  explicit AngleNearPiError(double angle)
      : std::runtime_error("rotation angle too close to pi for a stable logarithm"),
        angle(angle) {}
  double angle;
};

/// Rigid transform in SE(3), optionally stamped [s].
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::optional<double> stamp;

  Pose() = default;
  Pose(const Mat3& rotation, const Vec3& translation,
       std::optional<double> stamp = std::nullopt)
      : rotation(rotation), translation(translation), stamp(stamp) {}

  static Pose identity() { return {}; }

  Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  // Composition drops stamps; set them explicitly where they matter.
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  Vec3 operator*(const Vec3& point) const {
    return rotation * point + translation;
  }

  Pose with_stamp(double s) const { return {rotation, translation, s}; }
};

inline Vec6 make_tangent(const Vec3& rot, const Vec3& trans) {
  Vec6 xi;
  xi << rot, trans;
  return xi;
}

Mat3 skew(const Vec3& v);
Vec3 unskew(const Mat3& m);

Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& rotation);  // throws AngleNearPiError near pi

Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inv(const Vec3& phi);
Mat3 so3_right_jacobian(const Vec3& phi);
Mat3 so3_right_jacobian_inv(const Vec3& phi);

Pose se3_exp(const Vec6& xi);
Vec6 se3_log(const Pose& pose);  // throws AngleNearPiError near pi

// Right Jacobian of SE(3): exp(xi + d) ~ exp(xi) * exp(Jr(xi) * d).
Mat6 se3_right_jacobian(const Vec6& xi);
Mat6 se3_right_jacobian_inv(const Vec6& xi);

// Ad_T with rotation-first layout: [[R, 0], [[t]x R, R]].
Mat6 se3_adjoint(const Pose& pose);

// Ta * exp(tau * log(Ta^-1 * Tb)); tau must lie in [0, 1].
Pose pose_interpolate(const Pose& a, const Pose& b, double tau);

Pose pose_from_yaw(double yaw, const Vec3& translation);
double rotation_yaw(const Mat3& rotation);

bool is_orthonormal(const Mat3& rotation, double tol = 1e-9);

}  // namespace coopfuse
