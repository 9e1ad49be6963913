// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and runtime budgets are fixed here, not configurable.

#include "coopfuse/config.hpp"
#include "coopfuse/engine.hpp"
#include "coopfuse/eval.hpp"
#include "coopfuse/init.hpp"
#include "coopfuse/io.hpp"
#include "coopfuse/observability.hpp"
#include "coopfuse/rng.hpp"
#include "coopfuse/sim.hpp"
#include "coopfuse/weighting.hpp"
#include "graph_oracles.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace coopfuse;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("%s: criterion %d (%s) [%.2f s] %s\n", pass ? "PASS" : "FAIL",
              number, name.c_str(), seconds, detail.c_str());
  if (!pass) ++failures;
}

void run_criterion(int number, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = Clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = body();
  } catch (const std::exception& error) {
    pass = false;
    detail = std::string("exception: ") + error.what();
  }
  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  report(number, name, pass, seconds, detail);
}

Vec6 random_tangent(Rng& rng, double rot, double trans) {
  Vec6 xi;
  for (int i = 0; i < 3; ++i) xi(i) = rng.uniform(-rot, rot);
  for (int i = 3; i < 6; ++i) xi(i) = rng.uniform(-trans, trans);
  return xi;
}

Pose random_pose(Rng& rng, bool yaw_only) {
  if (yaw_only)
    return pose_from_yaw(rng.uniform(-3.0, 3.0),
                         Vec3(rng.uniform(-4, 4), rng.uniform(-4, 4),
                              rng.uniform(-2, 2)));
  return se3_exp(random_tangent(rng, 1.2, 4.0));
}

double jacobian_mismatch(const Eigen::MatrixXd& analytic,
                         const Eigen::MatrixXd& numeric) {
  const double scale = std::max({1.0, analytic.cwiseAbs().maxCoeff(),
                                 numeric.cwiseAbs().maxCoeff()});
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

// ---------------------------------------------------------------- criterion 1

std::pair<bool, std::string> observability_table() {
  Rng rng(20250801);
  double worst_angle = 0.0;
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial)
    for (const obs::Scenario scenario : obs::kAllScenarios) {
      const obs::ObservabilityReport r =
          obs::analyze(obs::random_scenario(scenario, rng));
      if (r.rank != obs::expected_rank(scenario)) ++mismatches;
      worst_angle = std::max(worst_angle, r.principal_angle);
    }
  std::ostringstream detail;
  detail << "rank mismatches " << mismatches << "/700, max principal angle "
         << worst_angle;
  return {mismatches == 0 && worst_angle <= 1e-6, detail.str()};
}

// ---------------------------------------------------------------- criterion 2

std::pair<bool, std::string> jacobian_correctness() {
  using namespace coopfuse::factors;
  Rng rng(20250802);
  double worst = 0.0;
  int checks = 0;

  const auto check = [&](const Eigen::MatrixXd& analytic,
                         const Eigen::MatrixXd& numeric) {
    worst = std::max(worst, jacobian_mismatch(analytic, numeric));
    ++checks;
  };

  for (int trial = 0; trial < 200; ++trial) {
    const bool yaw_only = trial < 100;

    {
      const Pose pose = random_pose(rng, yaw_only);
      const Pose prior = random_pose(rng, yaw_only);
      const FactorEvaluation eval = eval_se3_prior(pose, prior);
      check(eval.jacobians[0],
            oracles::numeric_jacobian(
                [&](const Vec6& d) -> Eigen::VectorXd {
                  return eval_se3_prior(pose * se3_exp(d), prior).error;
                },
                6));
    }
    {
      const Pose pose = yaw_only ? random_pose(rng, true)
                                 : se3_exp(random_tangent(rng, 0.8, 3.0));
      const FactorEvaluation eval = eval_tilt_prior(pose);
      check(eval.jacobians[0],
            oracles::numeric_jacobian(
                [&](const Vec6& d) -> Eigen::VectorXd {
                  return eval_tilt_prior(pose * se3_exp(d)).error;
                },
                2));
    }
    {
      const Pose a = random_pose(rng, yaw_only);
      const Pose b = random_pose(rng, yaw_only);
      const Pose meas = se3_exp(random_tangent(rng, 0.6, 1.0));
      const FactorEvaluation eval = eval_relative_pose(a, b, meas);
      check(eval.jacobians[0],
            oracles::numeric_jacobian(
                [&](const Vec6& d) -> Eigen::VectorXd {
                  return eval_relative_pose(a * se3_exp(d), b, meas).error;
                },
                6));
      check(eval.jacobians[1],
            oracles::numeric_jacobian(
                [&](const Vec6& d) -> Eigen::VectorXd {
                  return eval_relative_pose(a, b * se3_exp(d), meas).error;
                },
                6));
    }
    {
      const std::array<Pose, 4> poses = {
          random_pose(rng, yaw_only),
          random_pose(rng, yaw_only) * se3_exp(random_tangent(rng, 0.3, 1.0)),
          random_pose(rng, yaw_only),
          random_pose(rng, yaw_only) * se3_exp(random_tangent(rng, 0.3, 1.0))};
      const Vec3 d(rng.normal(), rng.normal(), rng.normal());
      for (const double tau : {0.0, 0.3, 0.5, 1.0}) {
        const FactorEvaluation eval = eval_detection(
            poses[0], poses[1], poses[2], poses[3], d, tau, tau);
        for (int v = 0; v < 4; ++v)
          check(eval.jacobians[v],
                oracles::numeric_jacobian(
                    [&](const Vec6& delta) -> Eigen::VectorXd {
                      std::array<Pose, 4> wiggled = poses;
                      wiggled[v] = wiggled[v] * se3_exp(delta);
                      return eval_detection(wiggled[0], wiggled[1], wiggled[2],
                                            wiggled[3], d, tau, tau)
                          .error;
                    },
                    3));
      }
    }
  }
  std::ostringstream detail;
  detail << checks << " jacobian blocks, worst relative error " << worst;
  return {worst <= 1e-5, detail.str()};
}

// ---------------------------------------------------------------- criterion 3

std::pair<bool, std::string> wasserstein_oracle() {
  Rng rng(20250803);
  double worst_diag = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec3 a, b;
    for (int k = 0; k < 3; ++k) {
      a(k) = rng.uniform(1e-6, 4.0);
      b(k) = rng.uniform(1e-6, 4.0);
    }
    const double closed =
        std::sqrt((a.cwiseSqrt() - b.cwiseSqrt()).squaredNorm());
    const double got = weighting::wasserstein2(a.asDiagonal().toDenseMatrix(),
                                               b.asDiagonal().toDenseMatrix());
    worst_diag = std::max(worst_diag, std::abs(got - closed));
  }

  const auto random_spd = [&rng] {
    Mat3 seed;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) seed(r, c) = rng.normal();
    return Mat3(seed * seed.transpose() + 1e-4 * Mat3::Identity());
  };
  bool symmetric = true;
  double worst_triangle = 0.0;
  double worst_identity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 a = random_spd();
    const Mat3 b = random_spd();
    const Mat3 c = random_spd();
    if (weighting::wasserstein2(a, b) != weighting::wasserstein2(b, a))
      symmetric = false;
    worst_identity = std::max(worst_identity, weighting::wasserstein2(a, a));
    const double violation = weighting::wasserstein2(a, c) -
                             weighting::wasserstein2(a, b) -
                             weighting::wasserstein2(b, c);
    worst_triangle = std::max(worst_triangle, violation);
  }
  std::ostringstream detail;
  detail << "diagonal worst " << worst_diag << ", symmetry "
         << (symmetric ? "exact" : "BROKEN") << ", triangle violation "
         << worst_triangle;
  return {worst_diag <= 1e-10 && symmetric && worst_triangle <= 1e-9 &&
              worst_identity <= 1e-9,
          detail.str()};
}

// ---------------------------------------------------------------- criterion 4

std::pair<bool, std::string> solver_oracle() {
  using namespace coopfuse::graph;
  Rng rng(20250804);
  const Mat6 tilt = Mat6::Identity() * 1e-6;
  Vec6 odo;
  odo << 1e-6, 1e-6, 1e-6, 1e-4, 1e-4, 1e-4;

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    FactorGraph graph(1e9);
    const Pose x_truth =
        pose_from_yaw(rng.uniform(-1, 1), Vec3(rng.normal(), rng.normal(), 0));
    const Pose y_truth = pose_from_yaw(
        rng.uniform(-1, 1),
        Vec3(rng.normal() + 3.0, rng.normal(), rng.uniform(0.5, 1.5)));
    const auto gauge_noise = [&] {
      return se3_exp(make_tangent(Vec3(0, 0, 0.02 * rng.normal()),
                                  0.02 * Vec3(rng.normal(), rng.normal(),
                                              rng.normal())));
    };
    graph.add_anchored_variable("x", x_truth * gauge_noise(), 0.0,
                                Mat6::Identity() * 1e-6, tilt);
    graph.add_anchored_variable("y", y_truth * gauge_noise(), 0.0,
                                Mat6::Identity() * 0.1, tilt);

    Pose x_prev = x_truth;
    Pose y_prev = y_truth;
    for (int k = 1; k < 3; ++k) {
      const Pose x_next =
          x_prev * pose_from_yaw(rng.uniform(-0.2, 0.2),
                                 Vec3(rng.uniform(0.2, 1.0),
                                      rng.uniform(-0.3, 0.3),
                                      0.05 * rng.normal()));
      const Pose y_next =
          y_prev * pose_from_yaw(rng.uniform(-0.2, 0.2),
                                 Vec3(rng.uniform(0.2, 1.0),
                                      rng.uniform(-0.3, 0.3),
                                      0.05 * rng.normal()));
      Vec6 lio_draw, vio_draw;
      for (int q = 0; q < 6; ++q) {
        const double sigma = q < 3 ? 1e-3 : 1e-2;
        lio_draw(q) = sigma * rng.normal();
        vio_draw(q) = sigma * rng.normal();
      }
      graph.add_odometry("x", x_prev.inverse() * x_next * se3_exp(lio_draw),
                         k * 1.0, odo.asDiagonal(), FactorType::lio_relative,
                         tilt);
      graph.add_odometry("y", y_prev.inverse() * y_next * se3_exp(vio_draw),
                         k * 1.0, odo.asDiagonal(), FactorType::vio_relative,
                         tilt);
      factors::DetectionMeasurement det;
      det.stamp = k * 1.0 - 0.4;
      const Pose x_at = pose_interpolate(x_prev, x_next, 0.6);
      const Pose y_at = pose_interpolate(y_prev, y_next, 0.6);
      det.position =
          x_at.rotation.transpose() * (y_at.translation - x_at.translation) +
          0.05 * Vec3(rng.normal(), rng.normal(), rng.normal());
      graph.add_detection(det, *graph.find_bracket("x", det.stamp),
                          *graph.find_bracket("y", det.stamp),
                          0.0025 * Mat3::Identity());
      x_prev = x_next;
      y_prev = y_next;
    }

    const std::vector<Pose> reference = graph_oracles::dense_gauss_newton(graph);
    FactorGraph solved = graph;
    solved.optimize();
    const auto order = solved.variable_order();
    for (size_t i = 0; i < order.size(); ++i)
      worst = std::max(worst,
                       se3_log(solved.variable(order[i]).inverse() *
                               reference[i])
                           .cwiseAbs()
                           .maxCoeff());
  }
  std::ostringstream detail;
  detail << "20 graphs, worst parameter difference " << worst;
  return {worst <= 1e-6, detail.str()};
}

// ------------------------------------------------------------ criteria 5 & 6

struct FixtureRun {
  sim::GeneratedStreams streams;
  engine::EngineOutputs outputs;
};

FixtureRun run_fixture(const fs::path& scenario_path,
                       const fs::path& run_config_path) {
  const sim::Scenario scenario = config::load_scenario(scenario_path);
  FixtureRun run;
  run.streams = sim::generate(scenario);
  engine::StreamBundle bundle;
  for (const auto& [id, robot] : run.streams.robots)
    bundle.odometry[id] = robot.odometry;
  bundle.detections = run.streams.detections;
  run.outputs =
      engine::run_engine(config::load_run_config(run_config_path), bundle);
  return run;
}

eval::Trajectory gt_of(const FixtureRun& run, const std::string& robot) {
  eval::Trajectory out;
  for (const auto& [stamp, pose] : run.streams.robots.at(robot).ground_truth)
    out.push_back({stamp, pose});
  return out;
}

eval::Trajectory local_of(const FixtureRun& run, const std::string& robot) {
  eval::Trajectory out;
  for (const auto& sample : run.streams.robots.at(robot).odometry)
    out.push_back({sample.stamp, sample.pose});
  return out;
}

/// RMS of the detector's aligned position error projected on the direction
/// perpendicular (in xy) to the detector-to-target baseline, over the window.
double projected_drift(const FixtureRun& run, const std::string& detector,
                       const std::string& target, double t_start,
                       double t_end) {
  const eval::Trajectory& estimate = run.outputs.trajectories.at(detector);
  const eval::Trajectory gt = gt_of(run, detector);
  const eval::Trajectory target_gt = gt_of(run, target);

  std::vector<Vec3> est_points, gt_points;
  for (const auto& point : estimate) {
    if (point.stamp < gt.front().stamp || point.stamp > gt.back().stamp)
      continue;
    est_points.push_back(point.pose.translation);
    gt_points.push_back(eval::interpolate_at(gt, point.stamp).translation);
  }
  const Pose align = eval::umeyama_alignment(est_points, gt_points);

  double sum = 0.0;
  int count = 0;
  for (const auto& point : estimate) {
    if (point.stamp < t_start || point.stamp > t_end) continue;
    if (point.stamp < gt.front().stamp || point.stamp > gt.back().stamp)
      continue;
    const Vec3 self = eval::interpolate_at(gt, point.stamp).translation;
    const Vec3 other =
        eval::interpolate_at(target_gt, point.stamp).translation;
    Vec3 baseline = other - self;
    baseline.z() = 0.0;
    if (baseline.norm() < 1e-6) continue;
    const Vec3 perp(-baseline.normalized().y(), baseline.normalized().x(), 0.0);
    const Vec3 error = align * point.pose.translation - self;
    const double projected = error.dot(perp);
    sum += projected * projected;
    ++count;
  }
  return count > 0 ? std::sqrt(sum / count) : 0.0;
}

std::pair<bool, std::string> degradation_recovery(const fs::path& fixtures,
                                                  double* correlation_out) {
  const FixtureRun blackout = run_fixture(fixtures / "scenario_vio_blackout.json",
                                          fixtures / "run_two_robots.json");
  const double coop_y =
      eval::ate(blackout.outputs.trajectories.at("Y"), gt_of(blackout, "Y"),
                eval::AteMode::xyz);
  const double vio_y =
      eval::ate(local_of(blackout, "Y"), gt_of(blackout, "Y"),
                eval::AteMode::xyz);

  {
    std::vector<weighting::VioSample> stream;
    for (const auto& sample : blackout.streams.robots.at("Y").odometry)
      stream.push_back(
          {sample.pose.with_stamp(sample.stamp), sample.pos_cov, sample.stamp});
    *correlation_out =
        eval::wasserstein_error_correlation(stream, gt_of(blackout, "Y"));
  }

  const FixtureRun two = run_fixture(fixtures / "scenario_lio_degraded_two.json",
                                     fixtures / "run_three_robots.json");
  const double coop_x_two = eval::ate(two.outputs.trajectories.at("X"),
                                      gt_of(two, "X"), eval::AteMode::xyz);
  const double lio_x = eval::ate(local_of(two, "X"), gt_of(two, "X"),
                                 eval::AteMode::xyz);

  const FixtureRun one = run_fixture(fixtures / "scenario_lio_degraded_one.json",
                                     fixtures / "run_two_robots.json");
  const double drift_one = projected_drift(one, "X", "Y", 20.0, 45.0);
  const double drift_two = projected_drift(two, "X", "Y", 20.0, 45.0);

  const bool pass = coop_y <= 0.25 * vio_y && coop_x_two <= 0.25 * lio_x &&
                    drift_one >= 3.0 * drift_two;
  std::ostringstream detail;
  detail << "blackout coop/vio " << coop_y << "/" << vio_y << " = "
         << coop_y / vio_y << "; lio-two coop/lio " << coop_x_two << "/"
         << lio_x << " = " << coop_x_two / lio_x
         << "; projected drift one/two " << drift_one << "/" << drift_two
         << " = " << drift_one / std::max(drift_two, 1e-12);
  return {pass, detail.str()};
}

// ---------------------------------------------------------------- criterion 7

std::pair<bool, std::string> initialization_quality() {
  Rng rng(20250807);
  init::InitConfig config;
  config.min_pairs = 8;

  // exact recovery, noise free
  double worst_exact = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> src;
    for (int i = 0; i < 12; ++i)
      src.emplace_back(0.4 * i, 0.25 * i - 1.0, 0.1 * rng.normal());
    const double yaw = rng.uniform(-3.0, 3.0);
    const Pose truth = pose_from_yaw(
        yaw, Vec3(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-1, 1)));
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(truth * p);
    const init::AlignmentResult result =
        init::align_yaw_translation(src, dst, config);
    worst_exact = std::max(
        worst_exact,
        std::abs(std::remainder(rotation_yaw(result.transform.rotation) - yaw,
                                2.0 * M_PI)));
    worst_exact = std::max(
        worst_exact, (result.transform.translation - truth.translation).norm());
  }

  // against the grid oracle under noise
  double worst_yaw = 0.0;
  double worst_trans = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> src;
    for (int i = 0; i < 10; ++i) src.emplace_back(0.35 * i, 0.0, 0.05 * i);
    for (int i = 0; i < 10; ++i) src.emplace_back(3.15, 0.3 * (i + 1), 0.5);
    const Pose truth = pose_from_yaw(
        rng.uniform(-3.0, 3.0),
        Vec3(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-1, 1)));
    std::vector<Vec3> dst;
    for (const auto& p : src)
      dst.push_back(truth * p +
                    0.05 * Vec3(rng.normal(), rng.normal(), rng.normal()));
    const init::AlignmentResult closed =
        init::align_yaw_translation(src, dst, config);
    const oracles::GridAlignment grid = oracles::grid_search_alignment(src, dst);
    worst_yaw = std::max(
        worst_yaw,
        std::abs(std::remainder(
            rotation_yaw(closed.transform.rotation) - grid.yaw, 2.0 * M_PI)));
    worst_trans = std::max(
        worst_trans, (closed.transform.translation - grid.translation).norm());
  }

  // hovering never initializes
  int hover_rejections = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::deque<weighting::VioSample> history;
    init::DetectionTrack track;
    track.track_id = trial;
    const Vec3 spot(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 2));
    for (int i = 0; i < 30; ++i) {
      const double t = 0.5 * i;
      weighting::VioSample sample;
      sample.pose =
          pose_from_yaw(rng.uniform(-3, 3),
                        spot + 0.02 * Vec3(rng.normal(), rng.normal(),
                                           rng.normal()))
              .with_stamp(t);
      sample.stamp = t;
      history.push_back(sample);
      if (i > 0)
        track.points_local.push_back(
            {spot + Vec3(1, 0, 0) +
                 0.05 * Vec3(rng.normal(), rng.normal(), rng.normal()),
             t - 0.2});
    }
    if (!init::try_initialize("y", history, {track}, Pose::identity(), config))
      ++hover_rejections;
  }

  std::ostringstream detail;
  detail << "noise-free worst " << worst_exact << "; vs grid oracle yaw "
         << worst_yaw << " rad, translation " << worst_trans
         << " m; hover rejections " << hover_rejections << "/50";
  return {worst_exact <= 1e-9 && worst_yaw <= 0.02 && worst_trans <= 0.05 &&
              hover_rejections == 50,
          detail.str()};
}

// ---------------------------------------------------------------- criterion 8

bool directories_identical(const fs::path& a, const fs::path& b,
                           std::string* detail) {
  std::vector<fs::path> names;
  for (const auto& entry : fs::recursive_directory_iterator(a))
    if (entry.is_regular_file())
      names.push_back(fs::relative(entry.path(), a));
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    std::ifstream fa(a / name, std::ios::binary);
    std::ifstream fb(b / name, std::ios::binary);
    if (!fb) {
      *detail = "missing " + name.string();
      return false;
    }
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      *detail = "differs: " + name.string();
      return false;
    }
  }
  *detail = std::to_string(names.size()) + " files identical";
  return true;
}

std::pair<bool, std::string> determinism(const fs::path& binary,
                                         const fs::path& fixtures) {
  const fs::path base = fs::temp_directory_path() / "coopfuse_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);

  const auto invoke = [&](const fs::path& out) -> bool {
    const std::string sim_cmd =
        binary.string() + " simulate --config " +
        (fixtures / "scenario_vio_blackout.json").string() + " --out " +
        (out / "streams").string() + " --log-level quiet";
    const std::string run_cmd =
        binary.string() + " run --streams " + (out / "streams").string() +
        " --config " + (fixtures / "run_two_robots.json").string() +
        " --out " + (out / "run").string() + " --log-level quiet";
    const std::string eval_cmd =
        binary.string() + " eval --estimates " + (out / "run").string() +
        " --gt " + (out / "streams").string() + " --streams " +
        (out / "streams").string() + " --out " + (out / "eval").string() +
        " --log-level quiet";
    return std::system(sim_cmd.c_str()) == 0 &&
           std::system(run_cmd.c_str()) == 0 &&
           std::system(eval_cmd.c_str()) == 0;
  };

  if (!invoke(base / "first") || !invoke(base / "second"))
    return {false, "pipeline invocation failed"};
  std::string detail;
  const bool same = directories_identical(base / "first", base / "second",
                                          &detail);
  fs::remove_all(base);
  return {same, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path fixtures = argc > 1 ? fs::path(argv[1]) : fs::path(FIXTURES_DIR);
  const fs::path binary = argc > 2 ? fs::path(argv[2]) : fs::path(COOP_FUSE_BIN);

  run_criterion(1, "observability ranks and nullspaces", [&] {
    const auto start = Clock::now();
    auto result = observability_table();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (s >= 5.0) {
      result.first = false;
      result.second += " (RUNTIME " + std::to_string(s) + " s >= 5 s)";
    }
    return result;
  });

  run_criterion(2, "analytic jacobians vs finite differences", [&] {
    const auto start = Clock::now();
    auto result = jacobian_correctness();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (s >= 10.0) {
      result.first = false;
      result.second += " (RUNTIME " + std::to_string(s) + " s >= 10 s)";
    }
    return result;
  });

  run_criterion(3, "wasserstein closed form and metric properties",
                wasserstein_oracle);
  run_criterion(4, "solver equivalence with the dense oracle", solver_oracle);

  double correlation = 0.0;
  run_criterion(5, "degradation recovery on the fixtures", [&] {
    const auto start = Clock::now();
    auto result = degradation_recovery(fixtures, &correlation);
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (s >= 60.0) {
      result.first = false;
      result.second += " (RUNTIME " + std::to_string(s) + " s >= 60 s)";
    }
    return result;
  });

  run_criterion(6, "wasserstein-error correlation on the blackout fixture",
                [&]() -> std::pair<bool, std::string> {
                  std::ostringstream detail;
                  detail << "pearson r = " << correlation;
                  return {correlation >= 0.5, detail.str()};
                });

  run_criterion(7, "initialization alignment quality", initialization_quality);
  run_criterion(8, "byte-identical repeated pipeline", [&] {
    return determinism(binary, fixtures);
  });

  std::printf("ACCEPTANCE: %d/8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
