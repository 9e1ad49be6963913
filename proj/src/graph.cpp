#include "coopfuse/graph.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>

namespace coopfuse::graph {
namespace {

using SparseMat = Eigen::SparseMatrix<double>;

Eigen::MatrixXd nullspace_of(const Eigen::MatrixXd& information, double tol) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  const double max_eig = std::max(eig.eigenvalues().maxCoeff(), 1.0);
  int nullity = 0;
  while (nullity < eig.eigenvalues().size() &&
         eig.eigenvalues()(nullity) < tol * max_eig)
    ++nullity;
  return eig.eigenvectors().leftCols(nullity);
}

}  // namespace

struct FactorGraph::Linearization {
  SparseMat jacobian;
  Eigen::VectorXd residual;
  std::vector<VariableKey> order;
  std::map<VariableKey, int> column;
};

bool FactorGraph::has_robot(const std::string& robot) const {
  const auto it = timelines_.find(robot);
  return it != timelines_.end() && !it->second.empty();
}

const std::vector<VariableKey>& FactorGraph::robot_keys(
    const std::string& robot) const {
  static const std::vector<VariableKey> empty;
  const auto it = timelines_.find(robot);
  return it == timelines_.end() ? empty : it->second;
}

const Pose& FactorGraph::variable(const VariableKey& key) const {
  return variables_.at(key);
}

std::optional<double> FactorGraph::latest_stamp(const std::string& robot) const {
  const auto it = timelines_.find(robot);
  if (it == timelines_.end() || it->second.empty()) return std::nullopt;
  return variables_.at(it->second.back()).stamp;
}

void FactorGraph::attach_tilt_prior(const VariableKey& key, const Mat6& tilt_cov) {
  factors_.push_back(Factor{FactorType::tilt_prior,
                            {key},
                            Pose::identity(),
                            Vec3::Zero(),
                            0.0,
                            0.0,
                            factors::NoiseModel(tilt_cov.topLeftCorner<2, 2>())});
}

VariableKey FactorGraph::add_anchored_variable(const std::string& robot,
                                               const Pose& pose, double stamp,
                                               const Mat6& prior_cov,
                                               const Mat6& tilt_cov) {
  const VariableKey key{robot, next_index_[robot]++};
  variables_[key] = pose.with_stamp(stamp);
  timelines_[robot].push_back(key);
  factors_.push_back(Factor{FactorType::se3_prior,
                            {key},
                            pose.with_stamp(stamp),
                            Vec3::Zero(),
                            0.0,
                            0.0,
                            factors::NoiseModel(prior_cov)});
  attach_tilt_prior(key, tilt_cov);
  return key;
}

VariableKey FactorGraph::add_free_variable(const std::string& robot,
                                           const Pose& pose, double stamp,
                                           const Mat6& tilt_cov) {
  const VariableKey key{robot, next_index_[robot]++};
  variables_[key] = pose.with_stamp(stamp);
  timelines_[robot].push_back(key);
  attach_tilt_prior(key, tilt_cov);
  return key;
}

VariableKey FactorGraph::add_odometry(const std::string& robot,
                                      const Pose& relative, double stamp,
                                      const Mat6& noise_cov,
                                      FactorType odometry_type,
                                      const Mat6& tilt_cov) {
  if (!has_robot(robot))
    throw std::invalid_argument("robot has no variables; anchor it first");
  if (odometry_type != FactorType::lio_relative &&
      odometry_type != FactorType::vio_relative)
    throw std::invalid_argument("odometry factor must be a relative type");
  const VariableKey previous = timelines_.at(robot).back();
  const double prev_stamp = *variables_.at(previous).stamp;
  if (stamp <= prev_stamp) throw OutOfOrderStampError{};

  const VariableKey key{robot, next_index_[robot]++};
  variables_[key] = (variables_.at(previous) * relative).with_stamp(stamp);
  timelines_[robot].push_back(key);
  factors_.push_back(Factor{odometry_type,
                            {previous, key},
                            relative,
                            Vec3::Zero(),
                            0.0,
                            0.0,
                            factors::NoiseModel(noise_cov)});
  attach_tilt_prior(key, tilt_cov);
  return key;
}

std::optional<std::pair<VariableKey, VariableKey>> FactorGraph::find_bracket(
    const std::string& robot, double stamp) const {
  const auto it = timelines_.find(robot);
  if (it == timelines_.end() || it->second.size() < 2) return std::nullopt;
  const auto& keys = it->second;
  // first variable with stamp >= query
  const auto pos = std::partition_point(keys.begin(), keys.end(),
                                        [&](const VariableKey& k) {
                                          return *variables_.at(k).stamp < stamp;
                                        });
  if (pos == keys.end()) return std::nullopt;
  if (*variables_.at(*pos).stamp == stamp) {
    if (pos != keys.begin()) return std::make_pair(*std::prev(pos), *pos);
    if (std::next(pos) != keys.end()) return std::make_pair(*pos, *std::next(pos));
    return std::nullopt;
  }
  if (pos == keys.begin()) return std::nullopt;  // older than the whole timeline
  return std::make_pair(*std::prev(pos), *pos);
}

int FactorGraph::add_detection(const factors::DetectionMeasurement& detection,
                               const std::pair<VariableKey, VariableKey>& x_keys,
                               const std::pair<VariableKey, VariableKey>& y_keys,
                               const Mat3& noise_cov) {
  const double tx0 = *variables_.at(x_keys.first).stamp;
  const double tx1 = *variables_.at(x_keys.second).stamp;
  const double ty0 = *variables_.at(y_keys.first).stamp;
  const double ty1 = *variables_.at(y_keys.second).stamp;
  if (!(tx0 <= detection.stamp && detection.stamp <= tx1) ||
      !(ty0 <= detection.stamp && detection.stamp <= ty1))
    throw std::invalid_argument("detection stamp not bracketed by the given keys");

  Factor factor{FactorType::detection,
                {x_keys.first, x_keys.second, y_keys.first, y_keys.second},
                Pose::identity(),
                detection.position,
                (detection.stamp - tx0) / (tx1 - tx0),
                (detection.stamp - ty0) / (ty1 - ty0),
                factors::NoiseModel(noise_cov)};
  factors_.push_back(std::move(factor));
  return static_cast<int>(factors_.size()) - 1;
}

int FactorGraph::add_se3_prior(const VariableKey& key, const Pose& prior,
                               const Mat6& cov) {
  factors_.push_back(Factor{FactorType::se3_prior,
                            {key},
                            prior,
                            Vec3::Zero(),
                            0.0,
                            0.0,
                            factors::NoiseModel(cov)});
  return static_cast<int>(factors_.size()) - 1;
}

factors::FactorEvaluation FactorGraph::evaluate(
    const Factor& factor, const std::map<VariableKey, Pose>& values) const {
  using namespace coopfuse::factors;
  FactorEvaluation eval;
  switch (factor.type) {
    case FactorType::se3_prior:
      eval = eval_se3_prior(values.at(factor.keys[0]), factor.measured_pose);
      break;
    case FactorType::tilt_prior:
      eval = eval_tilt_prior(values.at(factor.keys[0]));
      break;
    case FactorType::lio_relative:
    case FactorType::vio_relative:
      eval = eval_relative_pose(values.at(factor.keys[0]),
                                values.at(factor.keys[1]), factor.measured_pose);
      break;
    case FactorType::detection:
      eval = eval_detection(values.at(factor.keys[0]), values.at(factor.keys[1]),
                            values.at(factor.keys[2]), values.at(factor.keys[3]),
                            factor.measured_position, factor.tau_x, factor.tau_y);
      break;
  }
  return whiten(eval, factor.noise);
}

double FactorGraph::cost_at(const std::map<VariableKey, Pose>& values) const {
  double total = 0.0;
  for (const auto& factor : factors_)
    total += evaluate(factor, values).error.squaredNorm();
  return total;
}

double FactorGraph::cost() const { return cost_at(variables_); }

std::vector<VariableKey> FactorGraph::variable_order() const {
  std::vector<VariableKey> order;
  order.reserve(variables_.size());
  for (const auto& [key, pose] : variables_) order.push_back(key);
  return order;
}

FactorGraph::Linearization FactorGraph::linearize() const {
  Linearization lin;
  lin.order = variable_order();
  int col = 0;
  for (const auto& key : lin.order) lin.column[key] = 6 * col++;

  int rows = 0;
  for (const auto& factor : factors_) rows += static_cast<int>(factor.noise.dim());

  lin.residual.resize(rows);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(rows) * 12);

  int row = 0;
  for (const auto& factor : factors_) {
    const factors::FactorEvaluation eval = evaluate(factor, variables_);
    const int dim = static_cast<int>(eval.error.size());
    lin.residual.segment(row, dim) = eval.error;
    for (size_t v = 0; v < factor.keys.size(); ++v) {
      const int c0 = lin.column.at(factor.keys[v]);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < 6; ++c) {
          const double value = eval.jacobians[v](r, c);
          if (value != 0.0) triplets.emplace_back(row + r, c0 + c, value);
        }
    }
    row += dim;
  }
  lin.jacobian.resize(rows, 6 * static_cast<int>(lin.order.size()));
  lin.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return lin;
}

SolveReport FactorGraph::optimize(const SolverParams& params) {
  SolveReport report;
  if (variables_.empty()) {
    report.converged = true;
    last_report_ = report;
    return report;
  }

  Linearization lin = linearize();
  const int cols = static_cast<int>(lin.jacobian.cols());
  double cost = lin.residual.squaredNorm();
  report.initial_cost = cost;

  SparseMat hessian = (lin.jacobian.transpose() * lin.jacobian).pruned();
  Eigen::VectorXd gradient = lin.jacobian.transpose() * lin.residual;

  if (cols <= params.rank_check_max_cols) {
    const Eigen::MatrixXd dense = Eigen::MatrixXd(hessian);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    report.pivot_ratio = pivots.minCoeff() / std::max(pivots.maxCoeff(), 1e-300);
    if (report.pivot_ratio < params.rank_tolerance)
      throw SingularSystemError(nullspace_of(dense, 1e-10), lin.order);
  }

  SparseMat identity(cols, cols);
  identity.setIdentity();

  double lambda = params.initial_lambda;
  bool converged = gradient.cwiseAbs().maxCoeff() < 1e-15;
  bool exhausted = false;

  for (int iter = 0; iter < params.max_iterations && !converged && !exhausted;
       ++iter) {
    bool accepted = false;
    while (!accepted && !exhausted) {
      const SparseMat damped = hessian + lambda * identity;
      Eigen::SimplicialLDLT<SparseMat> solver(damped);
      Eigen::VectorXd delta;
      bool solve_ok = solver.info() == Eigen::Success;
      if (solve_ok) {
        delta = solver.solve(-gradient);
        solve_ok = delta.allFinite();
      }

      double trial_cost = std::numeric_limits<double>::infinity();
      std::map<VariableKey, Pose> trial;
      if (solve_ok) {
        trial = variables_;
        for (const auto& key : lin.order) {
          Pose& pose = trial.at(key);
          const auto stamp = pose.stamp;
          pose = pose * se3_exp(delta.segment<6>(lin.column.at(key)));
          pose.stamp = stamp;
        }
        try {
          trial_cost = cost_at(trial);
        } catch (const AngleNearPiError&) {
          trial_cost = std::numeric_limits<double>::infinity();
        }
      }

      if (trial_cost < cost) {
        variables_ = std::move(trial);
        lambda = std::max(lambda / params.lambda_decrease, 1e-12);
        report.last_step_inf_norm = delta.cwiseAbs().maxCoeff();
        const double previous = cost;
        cost = trial_cost;
        ++report.iterations;
        accepted = true;
        // the relative-decrease exit only counts once damping has receded
        // and the step itself is small, otherwise heavily damped or plateau
        // micro-progress reads as convergence
        if (report.last_step_inf_norm < params.step_tolerance ||
            (lambda <= params.initial_lambda &&
             report.last_step_inf_norm < params.flat_step_guard &&
             previous - cost <= params.relative_cost_tolerance *
                                    std::max(previous, 1e-30)))
          converged = true;
      } else {
        lambda *= params.lambda_increase;
        if (lambda > params.max_lambda) {
          if (report.iterations == 0 && !solve_ok)
            throw SingularSystemError(
                nullspace_of(Eigen::MatrixXd(hessian), 1e-10), lin.order);
          exhausted = true;  // no usable step remains
        }
      }
    }
    if (accepted && !converged) {
      lin = linearize();
      hessian = (lin.jacobian.transpose() * lin.jacobian).pruned();
      gradient = lin.jacobian.transpose() * lin.residual;
      if (gradient.cwiseAbs().maxCoeff() < 1e-15) converged = true;
    }
  }

  report.final_cost = cost;
  report.converged = converged;
  report.final_lambda = lambda;
  last_report_ = report;
  return report;
}

Eigen::MatrixXd FactorGraph::dense_information() const {
  const Linearization lin = linearize();
  const Eigen::MatrixXd dense_jacobian(lin.jacobian);
  return dense_jacobian.transpose() * dense_jacobian;
}

std::vector<Mat6> FactorGraph::marginal_covariances(
    const std::vector<VariableKey>& keys) const {
  const Linearization lin = linearize();
  SparseMat hessian = (lin.jacobian.transpose() * lin.jacobian).pruned();
  Eigen::SimplicialLDLT<SparseMat> solver(hessian);
  if (solver.info() != Eigen::Success) {
    SparseMat identity(hessian.rows(), hessian.cols());
    identity.setIdentity();
    hessian = hessian + 1e-12 * identity;
    solver.compute(hessian);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("marginal covariance: factorization failed");
  }
  std::vector<Mat6> out;
  out.reserve(keys.size());
  for (const auto& key : keys) {
    const int c0 = lin.column.at(key);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(hessian.rows(), 6);
    for (int i = 0; i < 6; ++i) rhs(c0 + i, i) = 1.0;
    const Eigen::MatrixXd solution = solver.solve(rhs);
    Mat6 marginal = solution.middleRows<6>(c0);
    out.push_back(0.5 * (marginal + marginal.transpose()));
  }
  return out;
}

Mat6 FactorGraph::marginal_covariance(const VariableKey& key) const {
  return marginal_covariances({key}).front();
}

int FactorGraph::slide_window(double now) {
  if (variables_.empty()) return 0;
  const double cutoff = now - window_length_;

  std::vector<VariableKey> dropped;
  for (const auto& [key, pose] : variables_)
    if (*pose.stamp < cutoff) dropped.push_back(key);
  if (dropped.empty()) return 0;

  const auto is_dropped = [&](const VariableKey& key) {
    return std::binary_search(dropped.begin(), dropped.end(), key);
  };

  // Marginal priors for survivors are computed before anything is removed,
  // from the linearization at the current estimates.
  std::vector<VariableKey> survivors;
  std::vector<std::string> removed_robots;
  for (auto& [robot, keys] : timelines_) {
    const bool affected =
        std::any_of(keys.begin(), keys.end(), is_dropped);
    if (!affected) continue;
    const auto survivor =
        std::find_if(keys.begin(), keys.end(),
                     [&](const VariableKey& k) { return !is_dropped(k); });
    if (survivor == keys.end())
      removed_robots.push_back(robot);
    else
      survivors.push_back(*survivor);
  }
  const std::vector<Mat6> marginals = marginal_covariances(survivors);
  std::vector<Pose> survivor_poses;
  survivor_poses.reserve(survivors.size());
  for (const auto& key : survivors) survivor_poses.push_back(variables_.at(key));

  for (const auto& key : dropped) variables_.erase(key);
  std::erase_if(factors_, [&](const Factor& factor) {
    return std::any_of(factor.keys.begin(), factor.keys.end(), is_dropped);
  });
  for (auto& [robot, keys] : timelines_)
    std::erase_if(keys, is_dropped);
  for (const auto& robot : removed_robots) timelines_.erase(robot);

  for (size_t i = 0; i < survivors.size(); ++i)
    add_se3_prior(survivors[i], survivor_poses[i], marginals[i]);

  return static_cast<int>(dropped.size());
}

}  // namespace coopfuse::graph
