#include "coopfuse/factors.hpp"

namespace coopfuse::factors {
namespace {

// d e_det / d xi_int for the observing (x) pose: [[R^T [t_y - t_x]x R, -I]].
Eigen::Matrix<double, 3, 6> detection_wrt_x_int(const Pose& x_int,
                                                const Pose& y_int) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>() = x_int.rotation.transpose() *
                    skew(y_int.translation - x_int.translation) *
                    x_int.rotation;
  j.rightCols<3>() = -Mat3::Identity();
  return j;
}

// d e_det / d xi_int for the observed (y) pose: [[0, R_x^T R_y]].
Eigen::Matrix<double, 3, 6> detection_wrt_y_int(const Pose& x_int,
                                                const Pose& y_int) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>().setZero();
  j.rightCols<3>() = x_int.rotation.transpose() * y_int.rotation;
  return j;
}

struct InterpolationJacobians {
  Pose interpolated;
  Mat6 wrt_first;   // d xi_int / d xi_k
  Mat6 wrt_second;  // d xi_int / d xi_k1
};

InterpolationJacobians interpolate_with_jacobians(const Pose& first,
                                                  const Pose& second,
                                                  double tau) {
  const Vec6 delta = se3_log(first.inverse() * second);
  const Pose step = se3_exp(tau * delta);
  const Pose interpolated = first * step;

  const Mat6 j_exp = se3_right_jacobian(tau * delta);
  const Mat6 j_log = se3_right_jacobian_inv(delta);
  const Mat6 tau_exp_log = tau * j_exp * j_log;

  InterpolationJacobians out;
  out.interpolated = interpolated;
  out.wrt_first =
      se3_adjoint(step.inverse()) - tau_exp_log * se3_adjoint(second.inverse() * first);
  out.wrt_second = tau_exp_log;
  return out;
}

}  // namespace

NoiseModel::NoiseModel(const Eigen::MatrixXd& covariance)
    : covariance_(covariance) {
  if (covariance_.rows() != covariance_.cols())
    throw std::invalid_argument("covariance must be square");
  for (Eigen::Index i = 0; i < covariance_.rows(); ++i) {
    if (covariance_(i, i) < -1e-10) throw NotPositiveDefiniteError{};
    covariance_(i, i) = std::max(covariance_(i, i), 1e-12);
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError{};
  const Eigen::MatrixXd lower = llt.matrixL();
  sqrt_information_ = lower.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(covariance_.rows(), covariance_.cols()));
}

FactorEvaluation eval_se3_prior(const Pose& pose, const Pose& prior) {
  const Vec6 error = se3_log(prior.inverse() * pose);
  FactorEvaluation eval;
  eval.error = error;
  eval.jacobians = {se3_right_jacobian_inv(error)};
  return eval;
}

FactorEvaluation eval_tilt_prior(const Pose& pose) {
  // Tilt read off the third rotation row (the world z axis seen from the
  // body): zero iff the pose is yaw-only, independent of yaw, and smooth
  // where the rotation log is not. To first order in the tilt the residual
  // equals the (roll, pitch) components of the rotation log, and at yaw-only
  // poses the Jacobian reduces exactly to [I2 0].
  const Vec3 body_z_row = pose.rotation.row(2).transpose();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, 6);
  jac.block<1, 3>(0, 0) = Vec3::UnitY().cross(body_z_row).transpose();
  jac.block<1, 3>(1, 0) = -Vec3::UnitX().cross(body_z_row).transpose();
  FactorEvaluation eval;
  eval.error = Vec2(body_z_row.y(), -body_z_row.x());
  eval.jacobians = {jac};
  return eval;
}

FactorEvaluation eval_relative_pose(const Pose& pose_a, const Pose& pose_b,
                                    const Pose& measured) {
  const Vec6 error = se3_log(measured.inverse() * pose_a.inverse() * pose_b);
  const Mat6 jr_inv = se3_right_jacobian_inv(error);
  FactorEvaluation eval;
  eval.error = error;
  eval.jacobians = {-jr_inv * se3_adjoint(pose_b.inverse() * pose_a), jr_inv};
  return eval;
}

FactorEvaluation eval_detection(const Pose& x_k, const Pose& x_k1,
                                const Pose& y_l, const Pose& y_l1,
                                const Vec3& detection, double tau_x,
                                double tau_y) {
  if (tau_x < 0.0 || tau_x > 1.0) throw TauOutOfRangeError(tau_x);
  if (tau_y < 0.0 || tau_y > 1.0) throw TauOutOfRangeError(tau_y);

  const InterpolationJacobians x = interpolate_with_jacobians(x_k, x_k1, tau_x);
  const InterpolationJacobians y = interpolate_with_jacobians(y_l, y_l1, tau_y);

  const Eigen::Matrix<double, 3, 6> wrt_x_int =
      detection_wrt_x_int(x.interpolated, y.interpolated);
  const Eigen::Matrix<double, 3, 6> wrt_y_int =
      detection_wrt_y_int(x.interpolated, y.interpolated);

  FactorEvaluation eval;
  eval.error = x.interpolated.rotation.transpose() *
                   (y.interpolated.translation - x.interpolated.translation) -
               detection;
  eval.jacobians = {wrt_x_int * x.wrt_first, wrt_x_int * x.wrt_second,
                    wrt_y_int * y.wrt_first, wrt_y_int * y.wrt_second};
  return eval;
}

FactorEvaluation whiten(const FactorEvaluation& eval, const NoiseModel& noise) {
  if (noise.dim() != eval.error.size())
    throw std::invalid_argument("noise dimension does not match error");
  FactorEvaluation out;
  out.error = noise.sqrt_information() * eval.error;
  out.jacobians.reserve(eval.jacobians.size());
  for (const auto& jac : eval.jacobians)
    out.jacobians.push_back(noise.sqrt_information() * jac);
  return out;
}

}  // namespace coopfuse::factors
