#pragma once

#include "coopfuse/se3.hpp"

namespace coopfuse::weighting {

struct NonPositiveDtError : std::invalid_argument {
  NonPositiveDtError() : std::invalid_argument("timestamp difference must be positive") {}
};

struct NotPsdError : std::runtime_error {
  NotPsdError() : std::runtime_error("covariance is not positive semidefinite") {}
};

/// Scan-matcher health attached to each LIO sample: minimum eigenvalue of the
/// approximate Hessian, thresholded against lambda_thr.
struct LioHealth {
  double min_eig = 0.0;
  bool degenerate = false;
};

/// One VIO output: pose plus the filter's positional covariance [m^2].
struct VioSample {
  Pose pose;
  Mat3 pos_cov = Mat3::Zero();
  double stamp = 0.0;
};

/// Adaptive-weighting parameters. Defaults follow the experimental setup;
/// sigma_alpha/sigma_beta have no published value and stay configurable.
struct WeightingParams {
  double lambda_thr = 430.0;

  double sigma_alpha = 1e-3;  // [rad] roll
  double sigma_beta = 1e-3;   // [rad] pitch

  double lo_sigma_yaw = 0.001;  // [rad]
  double hi_sigma_yaw = 1.0;    // [rad]
  double lo_sigma_pos = 0.01;   // [m]
  double hi_sigma_pos = 5.0;    // [m]

  double vmin_sigma_pos = 0.1;  // [m]
  double vmax_sigma_pos = 5.0;  // [m]
  double mu = 260.0;
  double nu = 20.0;
  double v_sigma_yaw = 0.01;  // [rad]

  double sigma_det = 0.13;  // [m]
};

inline LioHealth make_lio_health(double min_eig, const WeightingParams& p) {
  return {min_eig, min_eig < p.lambda_thr};
}

// Diagonal LIO relative-pose covariance: lo values iff both endpoint scans
// are healthy, hi values otherwise; the whole diagonal scales with dt.
Mat6 lio_noise(bool healthy_k, bool healthy_k1, double dt,
               const WeightingParams& p);

// 2-Wasserstein distance between zero-mean Gaussians with the given
// covariances, via symmetric eigendecomposition square roots.
double wasserstein2(const Mat3& s1, const Mat3& s2);

// VIO relative-pose covariance: sigma_pos = clamp(mu * W2, vmin*sqrt(dt),
// vmax*sqrt(dt)); yaw sigma inflated by nu when the unclamped sigma_pos
// exceeds the upper clamp.
Mat6 vio_noise(const VioSample& prev, const VioSample& cur,
               const WeightingParams& p);

Mat3 detection_noise(const WeightingParams& p);

}  // namespace coopfuse::weighting
