#pragma once

#include "coopfuse/se3.hpp"
#include "coopfuse/weighting.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace coopfuse::init {

struct DegenerateSpreadError : std::runtime_error {
  explicit DegenerateSpreadError(double spread)
      : std::runtime_error("source trajectory spread too small for alignment"),
        spread(spread) {}
  double spread;
};

struct InitConfig {
  double min_spread = 1.0;         // [m] max pairwise xy distance, centered src
  double cost_sigma_factor = 2.0;  // accept if cost/N < (factor * sigma_det)^2
  double sigma_det = 0.13;         // [m]
  int min_pairs = 8;
  double buffer_window = 20.0;  // [s] sliding buffer length
};

/// Yaw+translation transform aligning src onto dst with its summed squared
/// residual. The rotation is exactly a yaw rotation.
struct AlignmentResult {
  Pose transform;
  double cost = 0.0;  // [m^2], summed over pairs
  int pairs = 0;
  bool accepted = false;
};

/// Closed-form 4-DOF point-pattern alignment: yaw from the xy
/// cross-covariance, translation from the centroids (full 3D z offset).
/// Throws DegenerateSpreadError when the centered source xy spread is below
/// the configured minimum.
AlignmentResult align_yaw_translation(const std::vector<Vec3>& src,
                                      const std::vector<Vec3>& dst,
                                      const InitConfig& config);

struct TimedPoint {
  Vec3 point = Vec3::Zero();
  double stamp = 0.0;
};

/// One anonymous detection track, with points already composed into the
/// detector's odometry frame L.
struct DetectionTrack {
  int track_id = 0;
  std::vector<TimedPoint> points_local;
};

struct InitResult {
  std::string robot;
  int track_id = 0;
  Pose world_from_odometry;  // T_W<V> for the robot's own odometry frame
  Pose prior_pose;           // W-frame prior at prior_stamp
  double prior_stamp = 0.0;
  double cost_per_pair = 0.0;
  double yaw = 0.0;
  int pairs = 0;
};

/// Attempts to initialize one robot against every candidate track: VIO
/// positions are linearly interpolated to the detection stamps, aligned with
/// the 4-DOF closed form, and the best accepted track wins. The prior is
/// anchored at the robot's newest odometry sample. world_from_detector_local
/// maps the detector's odometry frame L into W (identity when the graph is
/// anchored at the detector's first odometry pose).
std::optional<InitResult> try_initialize(
    const std::string& robot,
    const std::deque<weighting::VioSample>& odometry_history,
    const std::vector<DetectionTrack>& candidate_tracks,
    const Pose& world_from_detector_local, const InitConfig& config);

}  // namespace coopfuse::init
