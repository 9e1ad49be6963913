#include "coopfuse/sim.hpp"

#include "coopfuse/rng.hpp"
#include "coopfuse/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace coopfuse::sim {
namespace {

constexpr double kHeadingStep = 1e-5;  // [s] for the velocity heading

struct FalsePositiveTrack {
  int track_id;
  double expires;
  Vec3 position_world;
};

std::vector<double> jittered_stamps(double rate, double duration,
                                    double jitter_fraction, Rng& rng,
                                    bool keep_first_exact) {
  const double period = 1.0 / rate;
  std::vector<double> stamps;
  for (int k = 0; k * period <= duration + 1e-9; ++k) {
    double stamp = k * period;
    if (jitter_fraction > 0.0 && !(keep_first_exact && k == 0))
      stamp += rng.uniform(-jitter_fraction, jitter_fraction) * period;
    if (stamp <= 0.0 && !(keep_first_exact && k == 0)) continue;
    if (stamp < 0.0) stamp = 0.0;
    if (stamp > duration) break;
    stamps.push_back(stamp);
  }
  return stamps;
}

bool in_window(const std::vector<Degradation>& degradations,
               const std::string& robot, Degradation::Kind kind, double t) {
  return std::any_of(degradations.begin(), degradations.end(),
                     [&](const Degradation& d) {
                       return d.robot == robot && d.kind == kind && d.covers(t);
                     });
}

double drift_amount(const std::vector<Degradation>& degradations,
                    const std::string& robot, double t_prev, double t_cur) {
  double total = 0.0;
  for (const auto& d : degradations) {
    if (d.robot != robot || d.kind != Degradation::Kind::vio_yaw_drift) continue;
    const double overlap =
        std::max(0.0, std::min(t_cur, d.t_end) - std::max(t_prev, d.t_start));
    total += d.drift_rate * overlap;
  }
  return total;
}

}  // namespace

Vec3 TrajectoryModel::position(double t) const {
  switch (kind) {
    case Kind::circle: {
      const double w = 2.0 * M_PI / period;
      return center + Vec3(radius * std::cos(w * t + phase),
                           radius * std::sin(w * t + phase),
                           z_amplitude * std::sin(w * t + phase));
    }
    case Kind::figure_eight: {
      const double w = 2.0 * M_PI / period;
      const double s = w * t + phase;
      return center + Vec3(axis_a * std::sin(s),
                           axis_b * std::sin(s) * std::cos(s),
                           z_amplitude * std::sin(s));
    }
    case Kind::line: {
      const double alpha = std::clamp(t / line_duration, 0.0, 1.0);
      return line_start + alpha * (line_end - line_start);
    }
    case Kind::hover:
      return hover_position;
  }
  return Vec3::Zero();
}

Pose TrajectoryModel::sample(double t) const {
  double yaw = fixed_yaw;
  if (yaw_mode == YawMode::tangent && kind != Kind::hover) {
    const Vec3 velocity =
        (position(t + kHeadingStep) - position(t - kHeadingStep)) /
        (2.0 * kHeadingStep);
    if (velocity.head<2>().norm() > 1e-9)
      yaw = std::atan2(velocity.y(), velocity.x());
  }
  return pose_from_yaw(yaw, position(t)).with_stamp(t);
}

const RobotSpec* Scenario::detector() const {
  for (const auto& robot : robots)
    if (robot.role == RobotSpec::Role::detector) return &robot;
  return nullptr;
}

void Scenario::validate() const {
  if (duration <= 0.0) throw std::invalid_argument("duration must be positive");
  if (sensors.odometry_rate <= 0.0 || sensors.detection_rate <= 0.0 ||
      sensors.gt_rate <= 0.0)
    throw std::invalid_argument("sensor rates must be positive");
  if (sensors.jitter_fraction < 0.0 || sensors.jitter_fraction > 0.45)
    throw std::invalid_argument("jitter fraction outside [0, 0.45]");
  int detectors = 0;
  std::set<std::string> ids;
  for (const auto& robot : robots) {
    if (!ids.insert(robot.id).second)
      throw std::invalid_argument("duplicate robot id: " + robot.id);
    if (robot.role == RobotSpec::Role::detector) ++detectors;
  }
  if (detectors != 1)
    throw std::invalid_argument("exactly one detector robot is required");
  for (size_t i = 0; i < degradations.size(); ++i) {
    const auto& degradation = degradations[i];
    if (degradation.t_end <= degradation.t_start)
      throw std::invalid_argument("degradation window must have t_end > t_start");
    for (size_t j = i + 1; j < degradations.size(); ++j) {
      const auto& other = degradations[j];
      if (other.robot == degradation.robot && other.kind == degradation.kind &&
          other.t_start < degradation.t_end && degradation.t_start < other.t_end)
        throw std::invalid_argument(
            "degradation windows of one kind must not overlap per robot");
    }
    const auto robot =
        std::find_if(robots.begin(), robots.end(), [&](const RobotSpec& r) {
          return r.id == degradation.robot;
        });
    if (robot == robots.end())
      throw std::invalid_argument("degradation refers to unknown robot " +
                                  degradation.robot);
    const bool lio = degradation.kind == Degradation::Kind::lio_degenerate;
    const bool is_detector = robot->role == RobotSpec::Role::detector;
    if (lio != is_detector)
      throw std::invalid_argument(
          "lio degradations apply to the detector, vio degradations to "
          "detected robots");
  }
}

GeneratedStreams generate(const Scenario& scenario) {
  scenario.validate();
  GeneratedStreams streams;
  const SensorConfig& cfg = scenario.sensors;

  int detected_index = 0;
  for (size_t robot_index = 0; robot_index < scenario.robots.size();
       ++robot_index) {
    const RobotSpec& robot = scenario.robots[robot_index];
    // one decoupled stream per robot keeps draw order independent of the
    // robot list composition
    Rng rng(scenario.seed * 1000003ull + robot_index + 1);
    RobotStreams out;

    const std::vector<double> stamps = jittered_stamps(
        cfg.odometry_rate, scenario.duration, cfg.jitter_fraction, rng, true);

    const bool is_detector = robot.role == RobotSpec::Role::detector;
    if (is_detector) {
      // LIO convention: the local frame is the first pose
      out.world_from_local = robot.trajectory.sample(stamps.front());
      out.world_from_local.stamp.reset();
    } else {
      out.world_from_local = pose_from_yaw(
          rng.uniform(-M_PI, M_PI),
          Vec3(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
               rng.uniform(-2.0, 2.0)));
    }

    Pose local = out.world_from_local.inverse() *
                 robot.trajectory.sample(stamps.front());
    Mat3 pos_cov = cfg.vio_cov0 * Mat3::Identity();

    for (size_t k = 0; k < stamps.size(); ++k) {
      const double t = stamps[k];
      if (k > 0) {
        const double t_prev = stamps[k - 1];
        const double dt = t - t_prev;
        const Pose truth_rel = robot.trajectory.sample(t_prev).inverse() *
                               robot.trajectory.sample(t);
        Vec6 noise = Vec6::Zero();
        if (is_detector) {
          const bool degraded =
              in_window(scenario.degradations, robot.id,
                        Degradation::Kind::lio_degenerate, t_prev) ||
              in_window(scenario.degradations, robot.id,
                        Degradation::Kind::lio_degenerate, t);
          noise(2) = cfg.lio_sigma_yaw * rng.normal();
          for (int axis = 3; axis < 6; ++axis)
            noise(axis) = cfg.lio_sigma_pos * rng.normal();
          if (degraded) {
            noise(2) += cfg.lio_degraded_sigma_yaw * rng.normal();
            noise(3) += cfg.lio_degraded_sigma_pos * rng.normal();
            noise(4) += cfg.lio_degraded_sigma_pos * rng.normal();
          }
        } else {
          const bool blackout = in_window(scenario.degradations, robot.id,
                                          Degradation::Kind::vio_blackout, t);
          const double growth =
              cfg.vio_cov_growth *
              (blackout ? cfg.vio_blackout_growth_factor : 1.0);
          Mat3 next_cov = pos_cov + growth * dt * Mat3::Identity();
          if (rng.uniform() < cfg.vio_reacquire_rate * dt)
            next_cov = cfg.vio_cov0 * Mat3::Identity() +
                       0.25 * (next_cov - cfg.vio_cov0 * Mat3::Identity());
          const double w2_step = weighting::wasserstein2(pos_cov, next_cov);
          const double sigma_pos =
              cfg.vio_base_sigma_pos + cfg.vio_coupling * w2_step;
          noise(2) = cfg.vio_sigma_yaw * rng.normal() +
                     drift_amount(scenario.degradations, robot.id, t_prev, t);
          for (int axis = 3; axis < 6; ++axis)
            noise(axis) = sigma_pos * rng.normal();
          pos_cov = next_cov;
        }
        local = local * truth_rel * se3_exp(noise);
      }

      OdometrySample sample;
      sample.stamp = t;
      sample.pose = local.with_stamp(t);
      if (is_detector) {
        const bool degraded = in_window(scenario.degradations, robot.id,
                                        Degradation::Kind::lio_degenerate, t);
        sample.min_eig = degraded
                             ? rng.uniform(cfg.degraded_min_eig_lo,
                                           cfg.degraded_min_eig_hi)
                             : rng.uniform(cfg.healthy_min_eig_lo,
                                           cfg.healthy_min_eig_hi);
        sample.has_min_eig = true;
      } else {
        sample.pos_cov = pos_cov;
      }
      out.odometry.push_back(sample);
    }

    const double gt_period = 1.0 / cfg.gt_rate;
    for (int k = 0; k * gt_period <= scenario.duration + 1e-9; ++k) {
      const double t = k * gt_period;
      out.ground_truth.emplace_back(t, robot.trajectory.sample(t));
    }

    if (!is_detector) ++detected_index;
    streams.robots[robot.id] = std::move(out);
  }

  // Detections: the detector observes every detected robot in range at each
  // detection stamp; anonymous track ids are stable per robot. False
  // positives appear as short-lived extra tracks with random-walk positions.
  const RobotSpec* detector = scenario.detector();
  Rng det_rng(scenario.seed * 1000003ull + 999983ull);
  const std::vector<double> det_stamps =
      jittered_stamps(cfg.detection_rate, scenario.duration,
                      cfg.jitter_fraction, det_rng, false);

  std::vector<FalsePositiveTrack> false_tracks;
  int next_false_id = 100;
  double prev_stamp = 0.0;
  for (const double t : det_stamps) {
    const Pose detector_pose = detector->trajectory.sample(t);
    int track = 0;
    for (const auto& robot : scenario.robots) {
      if (robot.role != RobotSpec::Role::detected) continue;
      const Pose target = robot.trajectory.sample(t);
      const Vec3 relative = detector_pose.rotation.transpose() *
                            (target.translation - detector_pose.translation);
      if (relative.norm() <= cfg.max_range) {
        DetectionSample det;
        det.stamp = t;
        det.track_id = track;
        det.position =
            relative + cfg.detection_sigma * Vec3(det_rng.normal(),
                                                  det_rng.normal(),
                                                  det_rng.normal());
        streams.detections.push_back(det);
      }
      ++track;
    }

    const double dt = t - prev_stamp;
    prev_stamp = t;
    if (cfg.false_positive_rate > 0.0 &&
        det_rng.uniform() < cfg.false_positive_rate * dt) {
      FalsePositiveTrack fp;
      fp.track_id = next_false_id++;
      fp.expires = t + det_rng.uniform(2.0, 10.0);
      fp.position_world =
          detector_pose.translation + Vec3(det_rng.uniform(-5.0, 5.0),
                                           det_rng.uniform(-5.0, 5.0),
                                           det_rng.uniform(0.0, 3.0));
      false_tracks.push_back(fp);
    }
    std::erase_if(false_tracks, [&](const FalsePositiveTrack& fp) {
      return fp.expires < t;
    });
    for (auto& fp : false_tracks) {
      fp.position_world += 0.3 * Vec3(det_rng.normal(), det_rng.normal(),
                                      det_rng.normal());
      DetectionSample det;
      det.stamp = t;
      det.track_id = fp.track_id;
      det.position = detector_pose.rotation.transpose() *
                         (fp.position_world - detector_pose.translation) +
                     cfg.detection_sigma * Vec3(det_rng.normal(),
                                                det_rng.normal(),
                                                det_rng.normal());
      streams.detections.push_back(det);
    }
  }

  return streams;
}

}  // namespace coopfuse::sim
