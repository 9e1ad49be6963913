#include "coopfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coopfuse::eval {
namespace {

Vec3 centroid(const std::vector<Vec3>& points) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

}  // namespace

double wrap_angle(double angle) {
  while (angle > M_PI) angle -= 2.0 * M_PI;
  while (angle <= -M_PI) angle += 2.0 * M_PI;
  return angle;
}

Pose umeyama_alignment(const std::vector<Vec3>& src,
                       const std::vector<Vec3>& dst, AlignmentMode mode) {
  if (src.size() != dst.size() || src.size() < 2)
    throw std::invalid_argument("alignment needs two equally sized point sets");
  const Vec3 src_mean = centroid(src);
  const Vec3 dst_mean = centroid(dst);

  Mat3 rotation;
  if (mode == AlignmentMode::se3) {
    Mat3 cross = Mat3::Zero();
    for (size_t i = 0; i < src.size(); ++i)
      cross += (dst[i] - dst_mean) * (src[i] - src_mean).transpose();
    const Eigen::JacobiSVD<Mat3> svd(cross,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 signs = Vec3::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
      signs(2) = -1.0;
    rotation =
        svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  } else {
    // yaw-only: closed form from the xy cross-covariance
    double sin_sum = 0.0;
    double cos_sum = 0.0;
    for (size_t i = 0; i < src.size(); ++i) {
      const Vec3 s = src[i] - src_mean;
      const Vec3 d = dst[i] - dst_mean;
      cos_sum += s.x() * d.x() + s.y() * d.y();
      sin_sum += s.x() * d.y() - s.y() * d.x();
    }
    rotation = so3_exp(Vec3(0.0, 0.0, std::atan2(sin_sum, cos_sum)));
  }
  return {rotation, dst_mean - rotation * src_mean};
}

Pose interpolate_at(const Trajectory& trajectory, double stamp) {
  const auto upper = std::partition_point(
      trajectory.begin(), trajectory.end(),
      [&](const StampedPose& p) { return p.stamp < stamp; });
  if (upper == trajectory.begin()) {
    if (upper->stamp == stamp) return upper->pose;
    throw std::out_of_range("stamp precedes the trajectory");
  }
  if (upper == trajectory.end())
    throw std::out_of_range("stamp beyond the trajectory");
  const auto lower = std::prev(upper);
  if (upper->stamp == stamp) return upper->pose;
  const double tau = (stamp - lower->stamp) / (upper->stamp - lower->stamp);
  return pose_interpolate(lower->pose, upper->pose, tau);
}

double ate(const Trajectory& estimate, const Trajectory& ground_truth,
           AteMode mode, AlignmentMode alignment) {
  if (ground_truth.size() < 2) throw InsufficientOverlapError{};
  std::vector<const StampedPose*> overlap;
  for (const auto& point : estimate)
    if (point.stamp >= ground_truth.front().stamp &&
        point.stamp <= ground_truth.back().stamp)
      overlap.push_back(&point);
  if (overlap.size() < 2) throw InsufficientOverlapError{};

  std::vector<Vec3> est_points;
  std::vector<Vec3> gt_points;
  std::vector<Pose> gt_poses;
  est_points.reserve(overlap.size());
  for (const StampedPose* point : overlap) {
    est_points.push_back(point->pose.translation);
    gt_poses.push_back(interpolate_at(ground_truth, point->stamp));
    gt_points.push_back(gt_poses.back().translation);
  }

  const Pose transform = umeyama_alignment(est_points, gt_points, alignment);
  const double align_yaw = rotation_yaw(transform.rotation);

  double sum = 0.0;
  for (size_t i = 0; i < overlap.size(); ++i) {
    switch (mode) {
      case AteMode::xy: {
        const Vec3 err = transform * est_points[i] - gt_points[i];
        sum += err.head<2>().squaredNorm();
        break;
      }
      case AteMode::xyz: {
        const Vec3 err = transform * est_points[i] - gt_points[i];
        sum += err.squaredNorm();
        break;
      }
      case AteMode::yaw: {
        // the alignment's yaw applies to the estimate before wrapping
        const double err =
            wrap_angle(align_yaw + rotation_yaw(overlap[i]->pose.rotation) -
                       rotation_yaw(gt_poses[i].rotation));
        sum += err * err;
        break;
      }
    }
  }
  return std::sqrt(sum / static_cast<double>(overlap.size()));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("correlation needs two equally sized series");
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - mean_a) * (b[i] - mean_b);
    var_a += (a[i] - mean_a) * (a[i] - mean_a);
    var_b += (b[i] - mean_b) * (b[i] - mean_b);
  }
  if (var_a == 0.0 || var_b == 0.0) throw ZeroVarianceError{};
  return cov / std::sqrt(var_a * var_b);
}

double wasserstein_error_correlation(
    const std::vector<weighting::VioSample>& vio_stream,
    const Trajectory& ground_truth) {
  std::vector<double> distances;
  std::vector<double> errors;
  for (size_t i = 0; i + 1 < vio_stream.size(); ++i) {
    const auto& prev = vio_stream[i];
    const auto& cur = vio_stream[i + 1];
    if (prev.stamp < ground_truth.front().stamp ||
        cur.stamp > ground_truth.back().stamp)
      continue;
    const Vec3 measured_rel =
        (prev.pose.inverse() * cur.pose).translation;
    const Vec3 truth_rel = (interpolate_at(ground_truth, prev.stamp).inverse() *
                            interpolate_at(ground_truth, cur.stamp))
                               .translation;
    distances.push_back(weighting::wasserstein2(prev.pos_cov, cur.pos_cov));
    errors.push_back((measured_rel - truth_rel).norm());
  }
  if (distances.size() < 10) throw InsufficientOverlapError{};
  return pearson(distances, errors);
}

}  // namespace coopfuse::eval
