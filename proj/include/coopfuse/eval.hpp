#pragma once

#include "coopfuse/se3.hpp"
#include "coopfuse/weighting.hpp"

#include <vector>

namespace coopfuse::eval {

struct InsufficientOverlapError : std::runtime_error {
  InsufficientOverlapError()
      : std::runtime_error("fewer than two estimate stamps overlap the ground truth") {}
};

struct ZeroVarianceError : std::runtime_error {
  ZeroVarianceError()
      : std::runtime_error("correlation input series has zero variance") {}
};

struct StampedPose {
  double stamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<StampedPose>;

enum class AteMode { xy, xyz, yaw };
enum class AlignmentMode { se3, yaw_translation };

/// Least-squares rigid alignment (no scale) mapping src points onto dst.
Pose umeyama_alignment(const std::vector<Vec3>& src,
                       const std::vector<Vec3>& dst,
                       AlignmentMode mode = AlignmentMode::se3);

/// Manifold interpolation of the trajectory at the stamp; stamps must be
/// sorted and bracket the query.
Pose interpolate_at(const Trajectory& trajectory, double stamp);

/// RMSE of position (xy or xyz [m]) or wrapped yaw [rad] after interpolating
/// the ground truth to the estimate stamps and aligning the estimate.
double ate(const Trajectory& estimate, const Trajectory& ground_truth,
           AteMode mode, AlignmentMode alignment = AlignmentMode::se3);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Pearson correlation between the per-step Wasserstein distance of
/// consecutive positional covariances and the norm of the relative position
/// error against ground truth. Needs at least 10 consecutive pairs.
double wasserstein_error_correlation(
    const std::vector<weighting::VioSample>& vio_stream,
    const Trajectory& ground_truth);

double wrap_angle(double angle);  // to (-pi, pi]

}  // namespace coopfuse::eval
