#pragma once

#include "coopfuse/se3.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace coopfuse::sim {

/// Closed-form ground-truth trajectory. Position is continuously
/// differentiable; yaw either follows the velocity heading or stays fixed.
struct TrajectoryModel {
  enum class Kind { circle, figure_eight, line, hover };
  enum class YawMode { tangent, fixed };

  Kind kind = Kind::circle;
  YawMode yaw_mode = YawMode::tangent;
  double fixed_yaw = 0.0;
  double phase = 0.0;  // [rad] added to the periodic argument

  Vec3 center = Vec3::Zero();  // circle / figure-eight
  double radius = 3.0;         // [m]
  double period = 40.0;        // [s]
  double z_amplitude = 0.0;    // [m]

  double axis_a = 4.0;  // figure-eight lobes [m]
  double axis_b = 2.0;

  Vec3 line_start = Vec3::Zero();
  Vec3 line_end = Vec3::Zero();
  double line_duration = 30.0;  // [s]

  Vec3 hover_position = Vec3::Zero();

  Vec3 position(double t) const;
  Pose sample(double t) const;
};

struct Degradation {
  enum class Kind { lio_degenerate, vio_blackout, vio_yaw_drift };
  std::string robot;
  Kind kind = Kind::vio_blackout;
  double t_start = 0.0;
  double t_end = 0.0;
  double drift_rate = 0.0;  // [rad/s], yaw drift only

  bool covers(double t) const { return t >= t_start && t <= t_end; }
};

struct RobotSpec {
  enum class Role { detector, detected };
  std::string id;
  Role role = Role::detected;
  TrajectoryModel trajectory;
  double mu = 260.0;  // VIO weighting scale used downstream
};

struct SensorConfig {
  double odometry_rate = 2.0;    // [Hz]
  double detection_rate = 10.0;  // [Hz]
  double gt_rate = 10.0;         // [Hz]
  double jitter_fraction = 0.1;  // of the sample period; 0 disables

  // LIO per-step noise [rad, m]; degraded adds xy/yaw noise on top
  double lio_sigma_yaw = 5e-4;
  double lio_sigma_pos = 5e-3;
  double lio_degraded_sigma_yaw = 0.03;
  double lio_degraded_sigma_pos = 0.4;
  double healthy_min_eig_lo = 1500.0;
  double healthy_min_eig_hi = 3000.0;
  double degraded_min_eig_lo = 50.0;
  double degraded_min_eig_hi = 400.0;

  // VIO noise: per-step position sigma = base + coupling * step W2, so the
  // Wasserstein distance correlates with the injected error by construction
  double vio_sigma_yaw = 1e-3;
  double vio_base_sigma_pos = 5e-4;
  double vio_coupling = 1.0;

  // VIO positional covariance model: isotropic, grows by q each second,
  // partially resets on feature reacquisition, growth inflated in blackouts
  double vio_cov0 = 1e-4;        // [m^2]
  double vio_cov_growth = 2e-5;  // [m^2/s]
  double vio_blackout_growth_factor = 150.0;
  double vio_reacquire_rate = 0.2;  // [Hz]

  double detection_sigma = 0.05;    // [m]
  double false_positive_rate = 0.0;  // [Hz]
  double max_range = 50.0;           // [m]
};

struct Scenario {
  uint64_t seed = 1;
  double duration = 60.0;  // [s]
  std::vector<RobotSpec> robots;
  std::vector<Degradation> degradations;
  SensorConfig sensors;

  const RobotSpec* detector() const;
  void validate() const;
};

struct OdometrySample {
  double stamp = 0.0;
  Pose pose;                    // absolute pose in the robot's local frame
  Mat3 pos_cov = Mat3::Zero();  // VIO only
  double min_eig = 0.0;         // LIO only
  bool has_min_eig = false;
};

struct DetectionSample {
  double stamp = 0.0;
  int track_id = 0;
  Vec3 position = Vec3::Zero();  // detector gravity-aligned body frame [m]
};

struct RobotStreams {
  std::vector<OdometrySample> odometry;
  Pose world_from_local;  // hidden frame offset; composing it with the
                          // noise-free stream recovers ground truth
  std::vector<std::pair<double, Pose>> ground_truth;
};

struct GeneratedStreams {
  std::map<std::string, RobotStreams> robots;
  std::vector<DetectionSample> detections;
};

GeneratedStreams generate(const Scenario& scenario);

}  // namespace coopfuse::sim
