#pragma once

#include "coopfuse/se3.hpp"

#include <string>
#include <vector>

namespace coopfuse::factors {

struct TauOutOfRangeError : std::invalid_argument {
  explicit TauOutOfRangeError(double tau)
      : std::invalid_argument("interpolation tau outside [0, 1]"), tau(tau) {}
  double tau;
};

struct NotPositiveDefiniteError : std::runtime_error {
  NotPositiveDefiniteError()
      : std::runtime_error("noise covariance is not positive definite") {}
};

/// 3D position of a detected robot in the detector's gravity-aligned body
/// frame, tagged with the detector tracker's track id.
struct DetectionMeasurement {
  Vec3 position = Vec3::Zero();  // [m]
  double stamp = 0.0;            // [s]
  int track_id = 0;
};

/// Residual and its Jacobians, one 6-column block per connected variable.
struct FactorEvaluation {
  Eigen::VectorXd error;
  std::vector<Eigen::MatrixXd> jacobians;
};

/// Gaussian noise as a covariance (6x6 for pose factors, 3x3 for detections).
/// The diagonal is floored at 1e-12 before factorization.
class NoiseModel {
 public:
  explicit NoiseModel(const Eigen::MatrixXd& covariance);

  const Eigen::MatrixXd& covariance() const { return covariance_; }
  // Inverse of the lower Cholesky factor of the covariance.
  const Eigen::MatrixXd& sqrt_information() const { return sqrt_information_; }
  Eigen::Index dim() const { return covariance_.rows(); }

 private:
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd sqrt_information_;
};

// error = log(prior^-1 * T), Jacobian = Jr^-1(error)
FactorEvaluation eval_se3_prior(const Pose& pose, const Pose& prior);

// 2-dim residual on the first two components of the rotation log; pins roll
// and pitch to zero without going through an Euler chart.
FactorEvaluation eval_tilt_prior(const Pose& pose);

// error = log(meas^-1 * Ta^-1 * Tb)
FactorEvaluation eval_relative_pose(const Pose& pose_a, const Pose& pose_b,
                                    const Pose& measured);

// Quaternary interpolation factor: the detection constrains the relative
// position of the manifold-interpolated poses at the detection stamp.
// error = [T_x_int^-1 * T_y_int]_translation - d. Jacobian order matches the
// argument order (x_k, x_k1, y_l, y_l1).
FactorEvaluation eval_detection(const Pose& x_k, const Pose& x_k1,
                                const Pose& y_l, const Pose& y_l1,
                                const Vec3& detection, double tau_x,
                                double tau_y);

// Premultiplies error and Jacobians by the inverse Cholesky factor, so that
// the squared norm of the whitened error equals the Mahalanobis cost term.
FactorEvaluation whiten(const FactorEvaluation& eval, const NoiseModel& noise);

}  // namespace coopfuse::factors
