#include "coopfuse/weighting.hpp"

#include <algorithm>
#include <cmath>

namespace coopfuse::weighting {
namespace {

// Symmetric PSD square root with eigenvalues floored at zero.
Mat3 psd_sqrt(const Mat3& m) {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  if (eig.eigenvalues().minCoeff() < -1e-10) throw NotPsdError{};
  const Vec3 roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Mat6 diagonal_cov(double s_alpha, double s_beta, double s_yaw, double s_pos) {
  Vec6 d;
  d << s_alpha * s_alpha, s_beta * s_beta, s_yaw * s_yaw, s_pos * s_pos,
      s_pos * s_pos, s_pos * s_pos;
  return d.asDiagonal();
}

}  // namespace

Mat6 lio_noise(bool healthy_k, bool healthy_k1, double dt,
               const WeightingParams& p) {
  if (dt <= 0.0) throw NonPositiveDtError{};
  const bool reliable = healthy_k && healthy_k1;
  const double s_yaw = reliable ? p.lo_sigma_yaw : p.hi_sigma_yaw;
  const double s_pos = reliable ? p.lo_sigma_pos : p.hi_sigma_pos;
  return diagonal_cov(p.sigma_alpha, p.sigma_beta, s_yaw, s_pos) * dt;
}

double wasserstein2(const Mat3& s1, const Mat3& s2) {
  // Canonical argument order makes the result exactly symmetric, which the
  // asymmetric trace formula alone is not at floating-point level.
  for (int i = 0; i < 9; ++i) {
    if (s1.data()[i] < s2.data()[i]) break;
    if (s1.data()[i] > s2.data()[i]) return wasserstein2(s2, s1);
  }
  // Procrustes form of Tr[S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2]: the trace
  // difference cancels catastrophically near S1 = S2, the aligned-root
  // difference norm does not.
  const Mat3 root1 = psd_sqrt(s1);
  const Mat3 root2 = psd_sqrt(s2);
  const Eigen::JacobiSVD<Mat3> svd(root2 * root1,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 align = svd.matrixV() * svd.matrixU().transpose();
  return (root1 - align * root2).norm();
}

Mat6 vio_noise(const VioSample& prev, const VioSample& cur,
               const WeightingParams& p) {
  const double dt = cur.stamp - prev.stamp;
  if (dt <= 0.0) throw NonPositiveDtError{};
  const double sqrt_dt = std::sqrt(dt);

  const double unclamped = p.mu * wasserstein2(prev.pos_cov, cur.pos_cov);
  const double s_pos = std::clamp(unclamped, p.vmin_sigma_pos * sqrt_dt,
                                  p.vmax_sigma_pos * sqrt_dt);
  // Yaw is trusted only while the positional deviation stays below the
  // saturation level of the clamp.
  const double s_yaw = unclamped <= p.vmax_sigma_pos * sqrt_dt
                           ? p.v_sigma_yaw * dt
                           : p.nu * p.v_sigma_yaw * dt;
  return diagonal_cov(p.sigma_alpha, p.sigma_beta, s_yaw, s_pos);
}

Mat3 detection_noise(const WeightingParams& p) {
  return Mat3::Identity() * (p.sigma_det * p.sigma_det);
}

}  // namespace coopfuse::weighting
