#pragma once

#include "coopfuse/rng.hpp"
#include "coopfuse/se3.hpp"

#include <string>
#include <vector>

namespace coopfuse::obs {

/// The analyzed configurations of the simplified two-pose-per-robot graph:
/// which factor rows are stacked, plus the two-detected-robot extension.
enum class Scenario {
  full,
  no_prior,
  no_tilt_prior,
  no_motion,
  lio_degraded,
  lio_degraded_two_detected,
  vio_degraded,
};

inline constexpr Scenario kAllScenarios[] = {
    Scenario::full,
    Scenario::no_prior,
    Scenario::no_tilt_prior,
    Scenario::no_motion,
    Scenario::lio_degraded,
    Scenario::lio_degraded_two_detected,
    Scenario::vio_degraded,
};

std::string scenario_name(Scenario scenario);
int expected_rank(Scenario scenario);

/// Yaw-only poses of the simplified graph. Column layout of all stacked
/// Jacobians: (xi_x1, xi_x2, xi_y1, xi_y2[, xi_z1, xi_z2]), rotation first
/// within each 6-block.
struct ScenarioSpec {
  Scenario scenario = Scenario::full;
  Pose x1, x2, y1, y2;
  Pose z1, z2;  // used only by the two-detected-robot extension

  /// Throws std::invalid_argument on non-yaw-only rotations, coincident
  /// robots, or missing movement (except where the scenario demands it).
  void validate() const;

  bool uses_third_robot() const {
    return scenario == Scenario::lio_degraded_two_detected;
  }
};

/// Generic-position spec for the scenario; no_motion forces y2 = y1.
ScenarioSpec random_scenario(Scenario scenario, Rng& rng);

/// Rows stacked in the order the scenario defines, built from the factor
/// module's evaluations (synchronized detections via tau = 0 and tau = 1).
Eigen::MatrixXd build_stacked_jacobian(const ScenarioSpec& spec);

/// Analytic nullspace span of the scenario (possibly zero columns).
Eigen::MatrixXd analytic_nullspace(const ScenarioSpec& spec);

struct ObservabilityReport {
  Scenario scenario;
  int rows = 0;
  int cols = 0;
  int rank = 0;
  int nullity = 0;
  Eigen::MatrixXd nullspace;  // orthonormal columns
  std::string direction_label;
  // largest principal angle between the numerical and analytic nullspaces
  double principal_angle = 0.0;
};

ObservabilityReport analyze(const ScenarioSpec& spec);

}  // namespace coopfuse::obs
