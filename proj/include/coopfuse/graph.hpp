#pragma once

#include "coopfuse/factors.hpp"

#include <compare>
#include <map>
#include <optional>
#include <vector>

namespace coopfuse::graph {

struct VariableKey {
  std::string robot;
  int index = 0;
  auto operator<=>(const VariableKey&) const = default;
};

struct OutOfOrderStampError : std::invalid_argument {
  OutOfOrderStampError()
      : std::invalid_argument("sample stamp does not advance the robot timeline") {}
};

/// Thrown when the normal equations are rank-deficient beyond the damping
/// floor. Carries the numerical nullspace so callers can report which
/// directions are unconstrained.
struct SingularSystemError : std::runtime_error {
  SingularSystemError(Eigen::MatrixXd nullspace, std::vector<VariableKey> order)
      : std::runtime_error("factor graph is not fully constrained"),
        nullspace(std::move(nullspace)),
        variable_order(std::move(order)) {}
  Eigen::MatrixXd nullspace;  // 6n x nullity, orthonormal columns
  std::vector<VariableKey> variable_order;
};

enum class FactorType { se3_prior, tilt_prior, lio_relative, vio_relative, detection };

struct Factor {
  FactorType type;
  std::vector<VariableKey> keys;
  Pose measured_pose;                   // prior / relative measurement
  Vec3 measured_position = Vec3::Zero();  // detection
  double tau_x = 0.0;
  double tau_y = 0.0;
  factors::NoiseModel noise;
};

struct SolverParams {
  int max_iterations = 25;
  double initial_lambda = 1e-6;
  double lambda_increase = 10.0;   // on a rejected step
  double lambda_decrease = 3.0;    // on an accepted step
  double max_lambda = 1e10;
  double step_tolerance = 1e-8;             // ||delta||_inf
  double relative_cost_tolerance = 1e-9;
  // The relative-cost exit only fires once steps are this small; plateaus
  // with large steps keep iterating up to max_iterations.
  double flat_step_guard = 1e-6;
  double rank_tolerance = 1e-12;            // relative pivot ratio
  // Explicit rank check runs only up to this system size; larger graphs are
  // structurally anchored by construction and checked through solve health.
  int rank_check_max_cols = 400;
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  double final_lambda = 0.0;
  double last_step_inf_norm = 0.0;
  double pivot_ratio = 0.0;  // min/max |pivot| of the undamped system
};

/// Sliding-window factor graph over stamped SE(3) variables, solved by
/// damped Gauss-Newton on the manifold. Single-writer; estimates read out
/// as value snapshots.
class FactorGraph {
 public:
  explicit FactorGraph(double window_length) : window_length_(window_length) {}

  double window_length() const { return window_length_; }

  bool has_robot(const std::string& robot) const;
  const std::vector<VariableKey>& robot_keys(const std::string& robot) const;
  const Pose& variable(const VariableKey& key) const;
  const std::map<VariableKey, Pose>& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::optional<double> latest_stamp(const std::string& robot) const;

  /// Starts (or restarts) a robot timeline with an SE(3)-prior-constrained
  /// variable; a tilt prior is attached as for every variable.
  VariableKey add_anchored_variable(const std::string& robot, const Pose& pose,
                                    double stamp, const Mat6& prior_cov,
                                    const Mat6& tilt_cov);

  /// Starts a robot timeline without an SE(3) prior (tilt prior only); the
  /// chain must then be constrained through detections or a later prior.
  VariableKey add_free_variable(const std::string& robot, const Pose& pose,
                                double stamp, const Mat6& tilt_cov);

  /// Extends a robot timeline by one odometry step. The new variable is
  /// initialized as previous_estimate * relative; inserts the relative
  /// factor and a tilt prior.
  VariableKey add_odometry(const std::string& robot, const Pose& relative,
                           double stamp, const Mat6& noise_cov,
                           FactorType odometry_type, const Mat6& tilt_cov);

  /// Consecutive variables (a, b) of the robot with stamp(a) <= t <= stamp(b).
  std::optional<std::pair<VariableKey, VariableKey>> find_bracket(
      const std::string& robot, double stamp) const;

  /// Inserts the quaternary detection factor between the given bracketing
  /// pairs; taus follow from the stamps. Returns the factor id.
  int add_detection(const factors::DetectionMeasurement& detection,
                    const std::pair<VariableKey, VariableKey>& x_keys,
                    const std::pair<VariableKey, VariableKey>& y_keys,
                    const Mat3& noise_cov);

  int add_se3_prior(const VariableKey& key, const Pose& prior, const Mat6& cov);

  SolveReport optimize(const SolverParams& params = {});

  /// Drops variables older than now - window_length. Each robot that loses
  /// variables gets an SE(3) prior on its oldest survivor, with covariance
  /// taken from the marginal of the last linearization. Returns the number
  /// of dropped variables; robots losing their whole timeline are removed.
  int slide_window(double now);

  /// Total weighted squared error at the current estimates.
  double cost() const;

  /// Stats of the most recent optimize() call.
  const SolveReport& last_report() const { return last_report_; }

  /// Whitened Gauss-Newton information matrix at the current estimates.
  Eigen::MatrixXd dense_information() const;

  /// Marginal covariance of one variable from the current linearization.
  Mat6 marginal_covariance(const VariableKey& key) const;
  std::vector<Mat6> marginal_covariances(const std::vector<VariableKey>& keys) const;

  std::vector<VariableKey> variable_order() const;

 private:
  struct Linearization;
  Linearization linearize() const;
  double cost_at(const std::map<VariableKey, Pose>& values) const;
  factors::FactorEvaluation evaluate(const Factor& factor,
                                     const std::map<VariableKey, Pose>& values) const;
  void attach_tilt_prior(const VariableKey& key, const Mat6& tilt_cov);

  double window_length_;
  std::map<VariableKey, Pose> variables_;
  std::vector<Factor> factors_;
  std::map<std::string, std::vector<VariableKey>> timelines_;
  std::map<std::string, int> next_index_;
  SolveReport last_report_;
};

}  // namespace coopfuse::graph
