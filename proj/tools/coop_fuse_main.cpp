#include <CLI11.hpp>
#include <json.hpp>

#include "coopfuse/config.hpp"
#include "coopfuse/engine.hpp"
#include "coopfuse/eval.hpp"
#include "coopfuse/io.hpp"
#include "coopfuse/observability.hpp"
#include "coopfuse/sim.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace coopfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitAcceptanceMismatch = 4;

struct Options {
  std::string log_level = "info";
  bool info() const { return log_level != "quiet"; }
};

int cmd_simulate(const Options& options, const fs::path& config_path,
                 const fs::path& out_dir, std::optional<uint64_t> seed) {
  sim::Scenario scenario;
  try {
    scenario = config::load_scenario(config_path);
  } catch (const std::exception& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return kExitConfigError;
  }
  if (seed) scenario.seed = *seed;

  const sim::GeneratedStreams streams = sim::generate(scenario);
  fs::create_directories(out_dir);
  for (const auto& [id, robot] : streams.robots) {
    io::write_odometry_csv(out_dir / (id + "_odometry.csv"), robot.odometry);
    eval::Trajectory gt;
    for (const auto& [stamp, pose] : robot.ground_truth)
      gt.push_back({stamp, pose});
    io::write_trajectory_csv(out_dir / (id + "_gt.csv"), gt);
  }
  io::write_detections_csv(out_dir / "detections.csv", streams.detections);

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["seed"] = scenario.seed;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(io::fnv1a_file(config_path)));
  manifest["config_fnv1a"] = hash;
  manifest["duration_s"] = scenario.duration;
  for (const auto& robot : scenario.robots) manifest["robots"].push_back(robot.id);
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";

  if (options.info())
    std::cerr << "simulate: " << streams.robots.size() << " robots, "
              << streams.detections.size() << " detections -> "
              << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_run(const Options& options, const fs::path& streams_dir,
            const fs::path& config_path, const fs::path& out_dir) {
  engine::RunConfig cfg;
  try {
    cfg = config::load_run_config(config_path);
  } catch (const std::exception& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return kExitConfigError;
  }

  engine::StreamBundle bundle;
  try {
    for (const auto& robot : cfg.robots)
      bundle.odometry[robot.id] =
          io::read_odometry_csv(streams_dir / (robot.id + "_odometry.csv"));
    bundle.detections =
        io::read_detections_csv(streams_dir / "detections.csv");
  } catch (const std::exception& error) {
    std::cerr << "data error: " << error.what() << "\n";
    return kExitDataError;
  }

  engine::EngineOutputs outputs;
  try {
    outputs = engine::run_engine(cfg, bundle);
  } catch (const std::exception& error) {
    std::cerr << "data error: " << error.what() << "\n";
    return kExitDataError;
  }

  fs::create_directories(out_dir);
  for (const auto& [robot, trajectory] : outputs.trajectories)
    io::write_trajectory_csv(out_dir / (robot + "_coop.csv"), trajectory);

  {
    std::ofstream out(out_dir / "noise_log.csv");
    out << "stamp_s,robot,kind,sigma_pos,sigma_yaw,w2\n";
    for (const auto& row : outputs.noise_log) {
      out << io::format_double(row.stamp) << "," << row.robot << "," << row.kind
          << "," << io::format_double(row.sigma_pos) << ","
          << io::format_double(row.sigma_yaw) << ",";
      if (row.has_w2) out << io::format_double(row.w2);
      out << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "assoc_log.csv");
    out << "stamp_s,track_id,outcome,robot,distance\n";
    for (const auto& row : outputs.assoc_log) {
      out << io::format_double(row.stamp) << "," << row.track_id << ","
          << row.outcome << "," << row.robot << ",";
      if (row.has_distance) out << io::format_double(row.distance);
      out << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "init_log.csv");
    out << "stamp_s,robot,track_id,cost_per_pair,yaw,pairs\n";
    for (const auto& row : outputs.init_log)
      out << io::format_double(row.stamp) << "," << row.robot << ","
          << row.track_id << "," << io::format_double(row.cost_per_pair) << ","
          << io::format_double(row.yaw) << "," << row.pairs << "\n";
  }
  {
    std::ofstream out(out_dir / "solve_log.csv");
    out << "stamp_s,iterations,initial_cost,final_cost,converged,dropped\n";
    for (const auto& row : outputs.solve_log)
      out << io::format_double(row.stamp) << "," << row.iterations << ","
          << io::format_double(row.initial_cost) << ","
          << io::format_double(row.final_cost) << ","
          << (row.converged ? 1 : 0) << "," << row.dropped << "\n";
  }

  if (options.info()) {
    size_t poses = 0;
    for (const auto& [robot, trajectory] : outputs.trajectories)
      poses += trajectory.size();
    std::cerr << "run: " << outputs.trajectories.size() << " robots, " << poses
              << " estimated poses, " << outputs.init_log.size()
              << " initializations -> " << out_dir.string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const Options& options, const fs::path& estimates_dir,
             const fs::path& gt_dir, const fs::path& streams_dir,
             const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream metrics(out_dir / "metrics.csv");
  metrics << "robot,method,ate_2d_m,ate_3d_m,ate_yaw_rad\n";
  std::ofstream correlation(out_dir / "correlation.csv");
  correlation << "robot,pearson_r,pairs\n";

  bool any_failure = false;
  std::set<std::string> robots;
  const auto scan = [&](const fs::path& dir, const std::string& suffix) {
    if (!fs::exists(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > suffix.size() &&
          name.substr(name.size() - suffix.size()) == suffix)
        robots.insert(name.substr(0, name.size() - suffix.size()));
    }
  };
  scan(estimates_dir, "_coop.csv");
  scan(streams_dir, "_odometry.csv");
  if (robots.empty()) {
    std::cerr << "data error: no *_coop.csv or *_odometry.csv inputs found\n";
    return kExitDataError;
  }

  for (const std::string& robot : robots) {
    eval::Trajectory gt;
    try {
      gt = io::read_trajectory_csv(gt_dir / (robot + "_gt.csv"));
    } catch (const std::exception& error) {
      std::cerr << "data error: " << error.what() << "\n";
      any_failure = true;
      continue;
    }

    const auto evaluate = [&](const eval::Trajectory& estimate,
                              const std::string& method) {
      try {
        metrics << robot << "," << method << ","
                << io::format_double(eval::ate(estimate, gt, eval::AteMode::xy))
                << ","
                << io::format_double(eval::ate(estimate, gt, eval::AteMode::xyz))
                << ","
                << io::format_double(eval::ate(estimate, gt, eval::AteMode::yaw))
                << "\n";
      } catch (const eval::InsufficientOverlapError& error) {
        std::cerr << "data error: " << robot << " (" << method
                  << "): " << error.what() << "\n";
        any_failure = true;
      }
    };

    const fs::path coop = estimates_dir / (robot + "_coop.csv");
    if (fs::exists(coop)) evaluate(io::read_trajectory_csv(coop), "coop");

    const fs::path odometry = streams_dir / (robot + "_odometry.csv");
    if (fs::exists(odometry)) {
      const auto samples = io::read_odometry_csv(odometry);
      if (samples.empty()) continue;
      eval::Trajectory local;
      for (const auto& s : samples) local.push_back({s.stamp, s.pose});
      const bool lio = samples.front().has_min_eig;
      evaluate(local, lio ? "lio" : "vio");
      if (!lio) {
        std::vector<weighting::VioSample> stream;
        for (const auto& s : samples)
          stream.push_back({s.pose.with_stamp(s.stamp), s.pos_cov, s.stamp});
        try {
          const double r = eval::wasserstein_error_correlation(stream, gt);
          correlation << robot << "," << io::format_double(r) << ","
                      << stream.size() - 1 << "\n";
        } catch (const std::exception& error) {
          std::cerr << "correlation: " << robot << ": " << error.what() << "\n";
        }
      }
    }
  }
  if (options.info())
    std::cerr << "eval: metrics for " << robots.size() << " robots -> "
              << out_dir.string() << "\n";
  return any_failure ? kExitDataError : kExitOk;
}

// Optional fixed poses: {"schema_version": 1, "x1": {"yaw": r, "position":
// [x, y, z]}, ..., "z2": {...}}; the no-motion scenario reuses y1 for y2.
std::optional<obs::ScenarioSpec> load_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config::ConfigError("cannot open poses config: " + path.string());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& error) {
    throw config::ConfigError(path.string() + ": " + error.what());
  }
  if (!root.contains("schema_version") || root.at("schema_version") != 1)
    throw config::ConfigError("poses config must declare \"schema_version\": 1");
  const auto pose_of = [&](const std::string& key) {
    const auto& node = root.at(key);
    const auto& p = node.at("position");
    return pose_from_yaw(node.at("yaw").get<double>(),
                         Vec3(p[0].get<double>(), p[1].get<double>(),
                              p[2].get<double>()));
  };
  obs::ScenarioSpec spec;
  spec.x1 = pose_of("x1");
  spec.x2 = pose_of("x2");
  spec.y1 = pose_of("y1");
  spec.y2 = pose_of("y2");
  spec.z1 = pose_of("z1");
  spec.z2 = pose_of("z2");
  return spec;
}

int cmd_observability(const Options& options, int trials, uint64_t seed,
                      const std::string& out_path,
                      const std::string& poses_path) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    out = &file;
  }

  std::optional<obs::ScenarioSpec> fixed;
  if (!poses_path.empty()) {
    fixed = load_poses(poses_path);
    trials = 1;
  }

  Rng rng(seed);
  *out << "scenario,trials,rank,expected_rank,nullity,max_principal_angle_rad,"
          "unobservable_direction\n";
  bool mismatch = false;
  for (const obs::Scenario scenario : obs::kAllScenarios) {
    int rank = -1;
    bool rank_consistent = true;
    double worst_angle = 0.0;
    std::string label;
    int nullity = 0;
    for (int trial = 0; trial < trials; ++trial) {
      obs::ScenarioSpec spec;
      if (fixed) {
        spec = *fixed;
        spec.scenario = scenario;
        if (scenario == obs::Scenario::no_motion) spec.y2 = spec.y1;
        spec.validate();  // coincident or tilted poses are a config error
      } else {
        spec = obs::random_scenario(scenario, rng);
      }
      const obs::ObservabilityReport report = obs::analyze(spec);
      if (trial == 0) {
        rank = report.rank;
        nullity = report.nullity;
        label = report.direction_label;
      } else if (report.rank != rank) {
        rank_consistent = false;
      }
      worst_angle = std::max(worst_angle, report.principal_angle);
    }
    const bool ok = rank_consistent && rank == obs::expected_rank(scenario) &&
                    worst_angle <= 1e-6;
    if (!ok) mismatch = true;
    *out << obs::scenario_name(scenario) << "," << trials << "," << rank << ","
         << obs::expected_rank(scenario) << "," << nullity << ","
         << io::format_double(worst_angle) << "," << label << "\n";
  }
  if (options.info())
    std::cerr << "observability: " << (mismatch ? "MISMATCH" : "ok") << "\n";
  return mismatch ? kExitAcceptanceMismatch : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative multi-robot localization tools"};
  app.require_subcommand(1);
  app.fallthrough();
  Options options;
  app.add_option("--log-level", options.log_level, "quiet|info")
      ->check(CLI::IsMember({"quiet", "info"}));

  std::string config_path;
  std::string out_dir = "out";
  std::string streams_dir;
  std::string gt_dir;
  std::string estimates_dir;
  uint64_t seed_value = 0;
  uint64_t obs_seed = 1;
  int obs_trials = 100;
  std::string obs_out;

  auto* simulate = app.add_subcommand("simulate", "generate scenario streams");
  simulate->add_option("--config", config_path, "scenario JSON")->required();
  simulate->add_option("--out", out_dir, "output directory");
  auto* seed_opt = simulate->add_option("--seed", seed_value, "seed override");

  auto* run = app.add_subcommand("run", "run the estimator over streams");
  run->add_option("--streams", streams_dir, "streams directory")->required();
  run->add_option("--config", config_path, "run JSON")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* eval_cmd = app.add_subcommand("eval", "trajectory metrics");
  eval_cmd->add_option("--estimates", estimates_dir, "estimates directory")
      ->required();
  eval_cmd->add_option("--gt", gt_dir, "ground-truth directory")->required();
  eval_cmd->add_option("--streams", streams_dir,
                       "odometry streams directory (default: estimates)");
  eval_cmd->add_option("--out", out_dir, "output directory");

  auto* observability =
      app.add_subcommand("observability", "rank/nullspace scenario table");
  observability->add_option("--trials", obs_trials, "random configurations");
  observability->add_option("--seed", obs_seed, "random seed");
  observability->add_option("--out", obs_out, "CSV path (default stdout)");
  observability->add_option("--config", config_path,
                            "fixed-pose JSON (overrides random trials)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      std::optional<uint64_t> seed_override;
      if (seed_opt->count() > 0) seed_override = seed_value;
      return cmd_simulate(options, config_path, out_dir, seed_override);
    }
    if (run->parsed()) return cmd_run(options, streams_dir, config_path, out_dir);
    if (eval_cmd->parsed())
      return cmd_eval(options, estimates_dir, gt_dir,
                      streams_dir.empty() ? estimates_dir : streams_dir,
                      out_dir);
    if (observability->parsed())
      return cmd_observability(options, obs_trials, obs_seed, obs_out,
                               observability->count("--config") ? config_path
                                                                : "");
  } catch (const config::ConfigError& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}
