#pragma once

#include "coopfuse/assoc.hpp"
#include "coopfuse/eval.hpp"
#include "coopfuse/graph.hpp"
#include "coopfuse/init.hpp"
#include "coopfuse/sim.hpp"
#include "coopfuse/weighting.hpp"

#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace coopfuse::engine {

struct RunConfig {
  struct Robot {
    std::string id;
    bool detector = false;
    double mu = 260.0;  // VIO weighting scale
  };
  std::vector<Robot> robots;
  double window_length = 30.0;  // [s]
  weighting::WeightingParams weighting;
  assoc::AssociationConfig association;
  init::InitConfig init;
  graph::SolverParams solver;
  double tilt_sigma = 1e-3;    // [rad]
  double anchor_sigma = 1e-3;  // detector anchor, all six axes
  // detected-robot prior: roll, pitch, yaw [rad^2], x, y, z [m^2]
  Vec6 initial_prior_variances =
      (Vec6() << 1e-2, 1e-2, 0.1, 0.25, 0.25, 0.25).finished();

  void validate() const;  // exactly one detector, positive window
};

/// Thrown when the optimizer reports a rank-deficient system; the label names
/// the matching degradation scenario of the analysis.
struct UnconstrainedGraphError : std::runtime_error {
  UnconstrainedGraphError(const std::string& label, int nullity)
      : std::runtime_error("factor graph unconstrained: " + label),
        label(label),
        nullity(nullity) {}
  std::string label;
  int nullity;
};

struct NoiseLogRow {
  double stamp;
  std::string robot;
  std::string kind;  // lio | vio
  double sigma_pos;
  double sigma_yaw;
  double w2;  // VIO only
  bool has_w2;
};

struct AssocLogRow {
  double stamp;
  int track_id;
  std::string outcome;  // associated | buffered | rejected_gate | stale
  std::string robot;    // associated robot, empty otherwise
  double distance;
  bool has_distance;
};

struct InitLogRow {
  double stamp;
  std::string robot;
  int track_id;
  double cost_per_pair;
  double yaw;
  int pairs;
};

struct SolveLogRow {
  double stamp;
  int iterations;
  double initial_cost;
  double final_cost;
  bool converged;
  int dropped;
};

struct EngineOutputs {
  std::map<std::string, eval::Trajectory> trajectories;  // W frame
  std::vector<NoiseLogRow> noise_log;
  std::vector<AssocLogRow> assoc_log;
  std::vector<InitLogRow> init_log;
  std::vector<SolveLogRow> solve_log;
};

/// Heuristic label matching the observability analysis scenarios.
std::string classify_nullspace(const graph::SingularSystemError& error);

/// Single-threaded streaming estimator. Events must arrive in stamp order;
/// every detection ends up associated, buffered for initialization, or
/// logged as rejected with a reason.
class Engine {
 public:
  explicit Engine(RunConfig config);
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  void ingest_odometry(const std::string& robot,
                       const sim::OdometrySample& sample);
  void ingest_detection(const sim::DetectionSample& detection);
  void finish();

  EngineOutputs take_outputs();
  const graph::FactorGraph& factor_graph() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct StreamBundle {
  std::map<std::string, std::vector<sim::OdometrySample>> odometry;
  std::vector<sim::DetectionSample> detections;
};

/// Replays the bundle strictly stamp-ordered (odometry before detections on
/// ties, robots by id) through a fresh engine.
EngineOutputs run_engine(const RunConfig& config, const StreamBundle& streams);

}  // namespace coopfuse::engine
