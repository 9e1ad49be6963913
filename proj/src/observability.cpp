#include "coopfuse/observability.hpp"

#include "coopfuse/factors.hpp"

#include <cmath>

namespace coopfuse::obs {
namespace {

// Row-block builder over a fixed column layout.
struct Stacker {
  explicit Stacker(int cols) : cols(cols) {}

  void add(const factors::FactorEvaluation& eval,
           const std::vector<int>& variable_slots) {
    const int dim = static_cast<int>(eval.error.size());
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(dim, cols);
    for (size_t v = 0; v < variable_slots.size(); ++v)
      row.middleCols<6>(6 * variable_slots[v]) = eval.jacobians[v];
    blocks.push_back(std::move(row));
  }

  Eigen::MatrixXd stacked() const {
    int rows = 0;
    for (const auto& block : blocks) rows += static_cast<int>(block.rows());
    Eigen::MatrixXd out(rows, cols);
    int row = 0;
    for (const auto& block : blocks) {
      out.middleRows(row, block.rows()) = block;
      row += static_cast<int>(block.rows());
    }
    return out;
  }

  int cols;
  std::vector<Eigen::MatrixXd> blocks;
};

factors::FactorEvaluation relative_rows(const Pose& a, const Pose& b) {
  return factors::eval_relative_pose(a, b, a.inverse() * b);
}

// Synchronized detection at the first (tau = 0) or second (tau = 1) pose
// pair, evaluated through the quaternary factor so the analysis shares the
// estimator's code path.
factors::FactorEvaluation detection_rows(const Pose& x_at, const Pose& x_other,
                                         const Pose& y_at, const Pose& y_other,
                                         double tau) {
  const Pose& x_k = tau == 0.0 ? x_at : x_other;
  const Pose& x_k1 = tau == 0.0 ? x_other : x_at;
  const Pose& y_l = tau == 0.0 ? y_at : y_other;
  const Pose& y_l1 = tau == 0.0 ? y_other : y_at;
  const Vec3 measured =
      x_at.rotation.transpose() * (y_at.translation - x_at.translation);
  return factors::eval_detection(x_k, x_k1, y_l, y_l1, measured, tau, tau);
}

Vec3 xy_perpendicular(const Vec3& v) { return {-v.y(), v.x(), 0.0}; }

std::string direction_label_for(Scenario scenario) {
  switch (scenario) {
    case Scenario::full:
    case Scenario::lio_degraded_two_detected:
      return "none";
    case Scenario::no_prior:
      return "global yaw and translation gauge";
    case Scenario::no_tilt_prior:
      return "rotation of robot Y about its direction of motion";
    case Scenario::no_motion:
      return "common yaw of the Y poses";
    case Scenario::lio_degraded:
      return "yaw of X2 mixed with motion perpendicular to the baseline";
    case Scenario::vio_degraded:
      return "yaw of Y2";
  }
  return "unknown";
}

}  // namespace

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::full: return "full";
    case Scenario::no_prior: return "no-prior";
    case Scenario::no_tilt_prior: return "no-tilt-prior";
    case Scenario::no_motion: return "no-motion";
    case Scenario::lio_degraded: return "lio-degraded";
    case Scenario::lio_degraded_two_detected: return "lio-degraded-two-detected";
    case Scenario::vio_degraded: return "vio-degraded";
  }
  return "unknown";
}

int expected_rank(Scenario scenario) {
  switch (scenario) {
    case Scenario::full: return 24;
    case Scenario::no_prior: return 20;
    case Scenario::no_tilt_prior: return 23;
    case Scenario::no_motion: return 23;
    case Scenario::lio_degraded: return 23;
    case Scenario::lio_degraded_two_detected: return 36;
    case Scenario::vio_degraded: return 23;
  }
  return -1;
}

void ScenarioSpec::validate() const {
  std::vector<const Pose*> poses = {&x1, &x2, &y1, &y2};
  if (uses_third_robot()) {
    poses.push_back(&z1);
    poses.push_back(&z2);
  }
  for (const Pose* pose : poses) {
    const Vec3 log = so3_log(pose->rotation);
    if (std::abs(log.x()) > 1e-9 || std::abs(log.y()) > 1e-9)
      throw std::invalid_argument("scenario poses must be yaw-only");
  }
  const auto apart = [](const Pose& a, const Pose& b) {
    return (a.translation - b.translation).norm() > 1e-2;
  };
  if (!apart(x1, y1) || !apart(x2, y2))
    throw std::invalid_argument("coincident robot poses are degenerate");
  if (uses_third_robot() && (!apart(x1, z1) || !apart(x2, z2)))
    throw std::invalid_argument("coincident robot poses are degenerate");
  if (scenario == Scenario::no_motion) {
    if ((y1.translation - y2.translation).norm() > 1e-12 ||
        (y1.rotation - y2.rotation).norm() > 1e-12)
      throw std::invalid_argument("no-motion scenario requires y2 == y1");
  } else if (!apart(y1, y2)) {
    throw std::invalid_argument("robot Y must move between the two poses");
  }
  if (!apart(x1, x2))
    throw std::invalid_argument("robot X must move between the two poses");
}

ScenarioSpec random_scenario(Scenario scenario, Rng& rng) {
  const auto random_yaw_pose = [&rng](double x_shift) {
    return pose_from_yaw(rng.uniform(-3.0, 3.0),
                         Vec3(x_shift + rng.uniform(-2.0, 2.0),
                              rng.uniform(-4.0, 4.0), rng.uniform(-1.0, 1.0)));
  };
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.x1 = random_yaw_pose(0.0);
  spec.x2 = random_yaw_pose(1.5);
  spec.y1 = random_yaw_pose(8.0);
  spec.y2 = scenario == Scenario::no_motion ? spec.y1 : random_yaw_pose(9.5);
  spec.z1 = random_yaw_pose(-8.0);
  spec.z2 = random_yaw_pose(-9.5);
  spec.validate();
  return spec;
}

Eigen::MatrixXd build_stacked_jacobian(const ScenarioSpec& spec) {
  spec.validate();
  using factors::eval_se3_prior;
  using factors::eval_tilt_prior;

  const int x1 = 0, x2 = 1, y1 = 2, y2 = 3, z1 = 4, z2 = 5;
  Stacker stack(spec.uses_third_robot() ? 36 : 24);

  const auto add_lio = [&] {
    stack.add(relative_rows(spec.x1, spec.x2), {x1, x2});
  };
  const auto add_vio = [&] {
    stack.add(relative_rows(spec.y1, spec.y2), {y1, y2});
  };
  const auto add_detections = [&] {
    stack.add(detection_rows(spec.x1, spec.x2, spec.y1, spec.y2, 0.0),
              {x1, x2, y1, y2});
    stack.add(detection_rows(spec.x2, spec.x1, spec.y2, spec.y1, 1.0),
              {x1, x2, y1, y2});
  };
  const auto add_prior_x = [&] {
    stack.add(eval_se3_prior(spec.x1, spec.x1), {x1});
  };
  const auto add_prior_y = [&] {
    stack.add(eval_se3_prior(spec.y1, spec.y1), {y1});
  };
  const auto add_tilt4 = [&] {
    stack.add(eval_tilt_prior(spec.x1), {x1});
    stack.add(eval_tilt_prior(spec.x2), {x2});
    stack.add(eval_tilt_prior(spec.y1), {y1});
    stack.add(eval_tilt_prior(spec.y2), {y2});
  };

  switch (spec.scenario) {
    case Scenario::full:
    case Scenario::no_motion:
      add_lio();
      add_vio();
      add_detections();
      add_prior_x();
      add_tilt4();
      break;
    case Scenario::no_prior:
      add_lio();
      add_vio();
      add_detections();
      add_tilt4();
      break;
    case Scenario::no_tilt_prior:
      add_lio();
      add_vio();
      add_detections();
      add_prior_x();
      break;
    case Scenario::lio_degraded:
      add_vio();
      add_detections();
      add_prior_x();
      add_prior_y();
      add_tilt4();
      break;
    case Scenario::vio_degraded:
      add_lio();
      add_detections();
      add_prior_x();
      add_prior_y();
      add_tilt4();
      break;
    case Scenario::lio_degraded_two_detected:
      add_vio();
      add_detections();
      add_prior_x();
      add_prior_y();
      add_tilt4();
      // robot Z block: its own odometry, synchronized detections by X,
      // prior and tilt rows
      stack.add(relative_rows(spec.z1, spec.z2), {z1, z2});
      stack.add(detection_rows(spec.x1, spec.x2, spec.z1, spec.z2, 0.0),
                {x1, x2, z1, z2});
      stack.add(detection_rows(spec.x2, spec.x1, spec.z2, spec.z1, 1.0),
                {x1, x2, z1, z2});
      stack.add(eval_se3_prior(spec.z1, spec.z1), {z1});
      stack.add(eval_tilt_prior(spec.z1), {z1});
      stack.add(eval_tilt_prior(spec.z2), {z2});
      break;
  }
  return stack.stacked();
}

Eigen::MatrixXd analytic_nullspace(const ScenarioSpec& spec) {
  const int cols = spec.uses_third_robot() ? 36 : 24;
  switch (spec.scenario) {
    case Scenario::full:
    case Scenario::lio_degraded_two_detected:
      return Eigen::MatrixXd(cols, 0);
    case Scenario::no_prior: {
      // left-multiplying every pose by a global yaw+translation is invisible;
      // in right-perturbation coordinates the direction is Ad_{T^-1} eps
      Eigen::MatrixXd span(cols, 4);
      const Pose* poses[4] = {&spec.x1, &spec.x2, &spec.y1, &spec.y2};
      Eigen::Matrix<double, 6, 4> gauge = Eigen::Matrix<double, 6, 4>::Zero();
      gauge(2, 0) = 1.0;  // global yaw
      gauge(3, 1) = 1.0;
      gauge(4, 2) = 1.0;
      gauge(5, 3) = 1.0;
      for (int v = 0; v < 4; ++v)
        span.middleRows<6>(6 * v) = se3_adjoint(poses[v]->inverse()) * gauge;
      return span;
    }
    case Scenario::no_tilt_prior: {
      Eigen::MatrixXd span = Eigen::MatrixXd::Zero(cols, 1);
      const Vec3 motion = spec.y1.translation - spec.y2.translation;
      span.block<3, 1>(12, 0) = spec.y1.rotation.transpose() * motion;
      span.block<3, 1>(18, 0) = spec.y2.rotation.transpose() * motion;
      return span;
    }
    case Scenario::no_motion: {
      Eigen::MatrixXd span = Eigen::MatrixXd::Zero(cols, 1);
      span(14, 0) = 1.0;  // yaw of y1
      span(20, 0) = 1.0;  // yaw of y2
      return span;
    }
    case Scenario::lio_degraded: {
      Eigen::MatrixXd span = Eigen::MatrixXd::Zero(cols, 1);
      span(8, 0) = 1.0;  // yaw of x2
      const Vec3 baseline = spec.x2.rotation.transpose() *
                            (spec.x2.translation - spec.y2.translation);
      const Vec3 perp = xy_perpendicular(baseline);
      span(9, 0) = perp.x();
      span(10, 0) = perp.y();
      return span;
    }
    case Scenario::vio_degraded: {
      Eigen::MatrixXd span = Eigen::MatrixXd::Zero(cols, 1);
      span(20, 0) = 1.0;  // yaw of y2
      return span;
    }
  }
  return Eigen::MatrixXd(cols, 0);
}

ObservabilityReport analyze(const ScenarioSpec& spec) {
  const Eigen::MatrixXd jacobian = build_stacked_jacobian(spec);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      jacobian, Eigen::ComputeThinU | Eigen::ComputeFullV);

  const double sigma_max = svd.singularValues()(0);
  const double tol =
      std::max(jacobian.rows(), jacobian.cols()) * sigma_max * 1e-12;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;

  ObservabilityReport report;
  report.scenario = spec.scenario;
  report.rows = static_cast<int>(jacobian.rows());
  report.cols = static_cast<int>(jacobian.cols());
  report.rank = rank;
  report.nullity = report.cols - rank;
  report.nullspace = svd.matrixV().rightCols(report.nullity);
  report.direction_label = direction_label_for(spec.scenario);

  const Eigen::MatrixXd analytic = analytic_nullspace(spec);
  if (analytic.cols() != report.nullity) {
    report.principal_angle = M_PI / 2.0;  // dimensions disagree: no match
    return report;
  }
  if (analytic.cols() == 0) {
    report.principal_angle = 0.0;
    return report;
  }
  const Eigen::MatrixXd analytic_basis =
      Eigen::HouseholderQR<Eigen::MatrixXd>(analytic)
          .householderQ()
          .setLength(analytic.cols()) *
      Eigen::MatrixXd::Identity(report.cols, analytic.cols());
  const Eigen::JacobiSVD<Eigen::MatrixXd> overlap(report.nullspace.transpose() *
                                                  analytic_basis);
  double min_cos = 1.0;
  for (int i = 0; i < overlap.singularValues().size(); ++i)
    min_cos = std::min(min_cos, overlap.singularValues()(i));
  report.principal_angle = std::acos(std::clamp(min_cos, -1.0, 1.0));
  return report;
}

}  // namespace coopfuse::obs
