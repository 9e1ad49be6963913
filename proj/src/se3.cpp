#include "coopfuse/se3.hpp"

#include <cmath>

namespace coopfuse {
namespace {

// Trigonometric coefficients of the SO(3)/SE(3) closed forms. Each switches
// to a series where the direct evaluation loses precision.

// sin(t)/t
double coeff_a(double t) {
  if (t < kSmallAngle) return 1.0 - t * t / 6.0 + t * t * t * t / 120.0;
  return std::sin(t) / t;
}

// (1 - cos(t))/t^2, evaluated cancellation-free via the half-angle identity
double coeff_b(double t) {
  if (t < kSmallAngle) return 0.5 - t * t / 24.0 + t * t * t * t / 720.0;
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// (t - sin(t))/t^3
double coeff_c(double t) {
  if (t < 1e-4) return 1.0 / 6.0 - t * t / 120.0 + t * t * t * t / 5040.0;
  return (t - std::sin(t)) / (t * t * t);
}

// 1/t^2 - (1 + cos(t))/(2 t sin(t)), the V^-1 coefficient
double coeff_e(double t) {
  if (t < 1e-4) return 1.0 / 12.0 + t * t / 720.0 + t * t * t * t / 30240.0;
  return 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
}

// Q-matrix coefficients (Barfoot), with series below the cancellation zone.
double coeff_m2(double t) {  // (t - sin t)/t^3
  return coeff_c(t);
}

double coeff_m3(double t) {  // (t^2 + 2 cos t - 2)/(2 t^4)
  if (t < 1e-4) return 1.0 / 24.0 - t * t / 720.0 + t * t * t * t / 40320.0;
  return (t * t + 2.0 * std::cos(t) - 2.0) / (2.0 * t * t * t * t);
}

double coeff_m4(double t) {  // (2t - 3 sin t + t cos t)/(2 t^5)
  if (t < 1e-4) return 1.0 / 120.0 - t * t / 2520.0;
  return (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) /
         (2.0 * t * t * t * t * t);
}

// Left Jacobian Q block for xi = (phi, rho).
Mat3 se3_q_left(const Vec3& phi, const Vec3& rho) {
  const double t = phi.norm();
  const Mat3 px = skew(phi);
  const Mat3 rx = skew(rho);
  const Mat3 prp = px * rx * px;
  return 0.5 * rx + coeff_m2(t) * (px * rx + rx * px + prp) +
         coeff_m3(t) * (px * px * rx + rx * px * px - 3.0 * prp) +
         coeff_m4(t) * (prp * px + px * prp);
}

Mat6 se3_left_jacobian(const Vec6& xi) {
  const Vec3 phi = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  const Mat3 jl = so3_left_jacobian(phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jl;
  out.bottomRightCorner<3, 3>() = jl;
  out.bottomLeftCorner<3, 3>() = se3_q_left(phi, rho);
  return out;
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Vec3 unskew(const Mat3& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

Mat3 so3_exp(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 px = skew(phi);
  return Mat3::Identity() + coeff_a(t) * px + coeff_b(t) * px * px;
}

Vec3 so3_log(const Mat3& rotation) {
  // theta from atan2(sin, cos) is stable away from pi; we reject near pi.
  const Vec3 w = unskew(rotation - rotation.transpose());
  const double s = 0.5 * w.norm();
  const double c = 0.5 * (rotation.trace() - 1.0);
  const double t = std::atan2(s, c);
  if (M_PI - t < kAnglePiMargin) throw AngleNearPiError(t);
  double k;  // theta / (2 sin theta)
  if (t < kSmallAngle) {
    k = 0.5 + t * t / 12.0 + 7.0 * t * t * t * t / 720.0;
  } else {
    k = 0.5 * t / std::sin(t);
  }
  return k * w;
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 px = skew(phi);
  return Mat3::Identity() + coeff_b(t) * px + coeff_c(t) * px * px;
}

Mat3 so3_left_jacobian_inv(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 px = skew(phi);
  return Mat3::Identity() - 0.5 * px + coeff_e(t) * px * px;
}

Mat3 so3_right_jacobian(const Vec3& phi) { return so3_left_jacobian(-phi); }

Mat3 so3_right_jacobian_inv(const Vec3& phi) {
  return so3_left_jacobian_inv(-phi);
}

Pose se3_exp(const Vec6& xi) {
  const Vec3 phi = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  return {so3_exp(phi), so3_left_jacobian(phi) * rho};
}

Vec6 se3_log(const Pose& pose) {
  const Vec3 phi = so3_log(pose.rotation);
  return make_tangent(phi, so3_left_jacobian_inv(phi) * pose.translation);
}

Mat6 se3_right_jacobian(const Vec6& xi) { return se3_left_jacobian(-xi); }

Mat6 se3_right_jacobian_inv(const Vec6& xi) {
  const Vec6 neg = -xi;
  const Vec3 phi = neg.head<3>();
  const Vec3 rho = neg.tail<3>();
  const Mat3 jl_inv = so3_left_jacobian_inv(phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jl_inv;
  out.bottomRightCorner<3, 3>() = jl_inv;
  out.bottomLeftCorner<3, 3>() = -jl_inv * se3_q_left(phi, rho) * jl_inv;
  return out;
}

Mat6 se3_adjoint(const Pose& pose) {
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = pose.rotation;
  out.bottomRightCorner<3, 3>() = pose.rotation;
  out.bottomLeftCorner<3, 3>() = skew(pose.translation) * pose.rotation;
  return out;
}

Pose pose_interpolate(const Pose& a, const Pose& b, double tau) {
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("interpolation parameter outside [0, 1]");
  return a * se3_exp(tau * se3_log(a.inverse() * b));
}

Pose pose_from_yaw(double yaw, const Vec3& translation) {
  return {so3_exp(Vec3(0.0, 0.0, yaw)), translation};
}

double rotation_yaw(const Mat3& rotation) {
  return std::atan2(rotation(1, 0), rotation(0, 0));
}

bool is_orthonormal(const Mat3& rotation, double tol) {
  const Mat3 err = rotation * rotation.transpose() - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() < tol &&
         std::abs(rotation.determinant() - 1.0) < tol;
}

}  // namespace coopfuse
