#include "coopfuse/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace coopfuse::config {
namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& error) {
    throw ConfigError(path.string() + ": " + error.what());
  }
}

void expect_keys(const json& node, const std::set<std::string>& allowed,
                 const std::string& context) {
  for (const auto& [key, value] : node.items())
    if (!allowed.contains(key))
      throw ConfigError("unknown key '" + key + "' in " + context);
}

void check_schema_version(const json& node, const std::string& context) {
  if (!node.contains("schema_version") || node.at("schema_version") != 1)
    throw ConfigError(context + " must declare \"schema_version\": 1");
}

double get_number(const json& node, const std::string& key, double fallback) {
  if (!node.contains(key)) return fallback;
  if (!node.at(key).is_number())
    throw ConfigError("'" + key + "' must be a number");
  return node.at(key).get<double>();
}

Vec3 get_vec3(const json& node, const std::string& key, const Vec3& fallback) {
  if (!node.contains(key)) return fallback;
  const auto& value = node.at(key);
  if (!value.is_array() || value.size() != 3)
    throw ConfigError("'" + key + "' must be a 3-element array");
  return {value[0].get<double>(), value[1].get<double>(),
          value[2].get<double>()};
}

sim::TrajectoryModel parse_trajectory(const json& node,
                                      const std::string& context) {
  expect_keys(node,
              {"kind", "yaw_mode", "fixed_yaw", "phase", "center", "radius",
               "period", "z_amplitude", "axis_a", "axis_b", "start", "end",
               "duration", "position"},
              context);
  sim::TrajectoryModel model;
  const std::string kind = node.at("kind").get<std::string>();
  if (kind == "circle")
    model.kind = sim::TrajectoryModel::Kind::circle;
  else if (kind == "figure_eight")
    model.kind = sim::TrajectoryModel::Kind::figure_eight;
  else if (kind == "line")
    model.kind = sim::TrajectoryModel::Kind::line;
  else if (kind == "hover")
    model.kind = sim::TrajectoryModel::Kind::hover;
  else
    throw ConfigError("unknown trajectory kind '" + kind + "' in " + context);

  if (node.contains("yaw_mode")) {
    const std::string mode = node.at("yaw_mode").get<std::string>();
    if (mode == "tangent")
      model.yaw_mode = sim::TrajectoryModel::YawMode::tangent;
    else if (mode == "fixed")
      model.yaw_mode = sim::TrajectoryModel::YawMode::fixed;
    else
      throw ConfigError("unknown yaw_mode '" + mode + "' in " + context);
  }
  model.fixed_yaw = get_number(node, "fixed_yaw", model.fixed_yaw);
  model.phase = get_number(node, "phase", model.phase);
  model.center = get_vec3(node, "center", model.center);
  model.radius = get_number(node, "radius", model.radius);
  model.period = get_number(node, "period", model.period);
  model.z_amplitude = get_number(node, "z_amplitude", model.z_amplitude);
  model.axis_a = get_number(node, "axis_a", model.axis_a);
  model.axis_b = get_number(node, "axis_b", model.axis_b);
  model.line_start = get_vec3(node, "start", model.line_start);
  model.line_end = get_vec3(node, "end", model.line_end);
  model.line_duration = get_number(node, "duration", model.line_duration);
  model.hover_position = get_vec3(node, "position", model.hover_position);
  return model;
}

sim::SensorConfig parse_sensors(const json& node) {
  expect_keys(node,
              {"odometry_rate", "detection_rate", "gt_rate", "jitter_fraction",
               "lio_sigma_yaw", "lio_sigma_pos", "lio_degraded_sigma_yaw",
               "lio_degraded_sigma_pos", "healthy_min_eig_lo",
               "healthy_min_eig_hi", "degraded_min_eig_lo",
               "degraded_min_eig_hi", "vio_sigma_yaw", "vio_base_sigma_pos",
               "vio_coupling", "vio_cov0", "vio_cov_growth",
               "vio_blackout_growth_factor", "vio_reacquire_rate",
               "detection_sigma", "false_positive_rate", "max_range"},
              "sensors");
  sim::SensorConfig cfg;
  cfg.odometry_rate = get_number(node, "odometry_rate", cfg.odometry_rate);
  cfg.detection_rate = get_number(node, "detection_rate", cfg.detection_rate);
  cfg.gt_rate = get_number(node, "gt_rate", cfg.gt_rate);
  cfg.jitter_fraction = get_number(node, "jitter_fraction", cfg.jitter_fraction);
  cfg.lio_sigma_yaw = get_number(node, "lio_sigma_yaw", cfg.lio_sigma_yaw);
  cfg.lio_sigma_pos = get_number(node, "lio_sigma_pos", cfg.lio_sigma_pos);
  cfg.lio_degraded_sigma_yaw =
      get_number(node, "lio_degraded_sigma_yaw", cfg.lio_degraded_sigma_yaw);
  cfg.lio_degraded_sigma_pos =
      get_number(node, "lio_degraded_sigma_pos", cfg.lio_degraded_sigma_pos);
  cfg.healthy_min_eig_lo =
      get_number(node, "healthy_min_eig_lo", cfg.healthy_min_eig_lo);
  cfg.healthy_min_eig_hi =
      get_number(node, "healthy_min_eig_hi", cfg.healthy_min_eig_hi);
  cfg.degraded_min_eig_lo =
      get_number(node, "degraded_min_eig_lo", cfg.degraded_min_eig_lo);
  cfg.degraded_min_eig_hi =
      get_number(node, "degraded_min_eig_hi", cfg.degraded_min_eig_hi);
  cfg.vio_sigma_yaw = get_number(node, "vio_sigma_yaw", cfg.vio_sigma_yaw);
  cfg.vio_base_sigma_pos =
      get_number(node, "vio_base_sigma_pos", cfg.vio_base_sigma_pos);
  cfg.vio_coupling = get_number(node, "vio_coupling", cfg.vio_coupling);
  cfg.vio_cov0 = get_number(node, "vio_cov0", cfg.vio_cov0);
  cfg.vio_cov_growth = get_number(node, "vio_cov_growth", cfg.vio_cov_growth);
  cfg.vio_blackout_growth_factor = get_number(
      node, "vio_blackout_growth_factor", cfg.vio_blackout_growth_factor);
  cfg.vio_reacquire_rate =
      get_number(node, "vio_reacquire_rate", cfg.vio_reacquire_rate);
  cfg.detection_sigma = get_number(node, "detection_sigma", cfg.detection_sigma);
  cfg.false_positive_rate =
      get_number(node, "false_positive_rate", cfg.false_positive_rate);
  cfg.max_range = get_number(node, "max_range", cfg.max_range);
  return cfg;
}

}  // namespace

sim::Scenario load_scenario(const std::filesystem::path& path) {
  const json root = load_json(path);
  check_schema_version(root, "scenario config");
  expect_keys(root,
              {"schema_version", "seed", "duration", "robots", "degradations",
               "sensors"},
              "scenario config");

  sim::Scenario scenario;
  if (root.contains("seed")) scenario.seed = root.at("seed").get<uint64_t>();
  scenario.duration = get_number(root, "duration", scenario.duration);
  if (!root.contains("robots") || !root.at("robots").is_array())
    throw ConfigError("scenario config needs a 'robots' array");
  for (const auto& node : root.at("robots")) {
    expect_keys(node, {"id", "role", "trajectory", "mu"}, "robot entry");
    sim::RobotSpec robot;
    robot.id = node.at("id").get<std::string>();
    const std::string role = node.at("role").get<std::string>();
    if (role == "detector")
      robot.role = sim::RobotSpec::Role::detector;
    else if (role == "detected")
      robot.role = sim::RobotSpec::Role::detected;
    else
      throw ConfigError("unknown robot role '" + role + "'");
    robot.trajectory =
        parse_trajectory(node.at("trajectory"), "trajectory of " + robot.id);
    robot.mu = get_number(node, "mu", robot.mu);
    scenario.robots.push_back(std::move(robot));
  }
  if (root.contains("degradations")) {
    for (const auto& node : root.at("degradations")) {
      expect_keys(node, {"robot", "kind", "t_start", "t_end", "drift_rate"},
                  "degradation entry");
      sim::Degradation degradation;
      degradation.robot = node.at("robot").get<std::string>();
      const std::string kind = node.at("kind").get<std::string>();
      if (kind == "lio_degenerate")
        degradation.kind = sim::Degradation::Kind::lio_degenerate;
      else if (kind == "vio_blackout")
        degradation.kind = sim::Degradation::Kind::vio_blackout;
      else if (kind == "vio_yaw_drift")
        degradation.kind = sim::Degradation::Kind::vio_yaw_drift;
      else
        throw ConfigError("unknown degradation kind '" + kind + "'");
      degradation.t_start = node.at("t_start").get<double>();
      degradation.t_end = node.at("t_end").get<double>();
      degradation.drift_rate = get_number(node, "drift_rate", 0.0);
      scenario.degradations.push_back(degradation);
    }
  }
  if (root.contains("sensors"))
    scenario.sensors = parse_sensors(root.at("sensors"));
  scenario.validate();
  return scenario;
}

engine::RunConfig load_run_config(const std::filesystem::path& path) {
  const json root = load_json(path);
  check_schema_version(root, "run config");
  expect_keys(root,
              {"schema_version", "robots", "window_length", "weighting",
               "association", "init", "solver", "tilt_sigma", "anchor_sigma",
               "initial_prior_variances"},
              "run config");

  engine::RunConfig cfg;
  if (!root.contains("robots") || !root.at("robots").is_array())
    throw ConfigError("run config needs a 'robots' array");
  for (const auto& node : root.at("robots")) {
    expect_keys(node, {"id", "role", "mu"}, "robot entry");
    engine::RunConfig::Robot robot;
    robot.id = node.at("id").get<std::string>();
    const std::string role = node.at("role").get<std::string>();
    if (role == "detector")
      robot.detector = true;
    else if (role != "detected")
      throw ConfigError("unknown robot role '" + role + "'");
    robot.mu = get_number(node, "mu", robot.mu);
    cfg.robots.push_back(std::move(robot));
  }
  cfg.window_length = get_number(root, "window_length", cfg.window_length);

  if (root.contains("weighting")) {
    const json& node = root.at("weighting");
    expect_keys(node,
                {"lambda_thr", "sigma_alpha", "sigma_beta", "lo_sigma_yaw",
                 "hi_sigma_yaw", "lo_sigma_pos", "hi_sigma_pos",
                 "vmin_sigma_pos", "vmax_sigma_pos", "mu", "nu", "v_sigma_yaw",
                 "sigma_det"},
                "weighting");
    auto& w = cfg.weighting;
    w.lambda_thr = get_number(node, "lambda_thr", w.lambda_thr);
    w.sigma_alpha = get_number(node, "sigma_alpha", w.sigma_alpha);
    w.sigma_beta = get_number(node, "sigma_beta", w.sigma_beta);
    w.lo_sigma_yaw = get_number(node, "lo_sigma_yaw", w.lo_sigma_yaw);
    w.hi_sigma_yaw = get_number(node, "hi_sigma_yaw", w.hi_sigma_yaw);
    w.lo_sigma_pos = get_number(node, "lo_sigma_pos", w.lo_sigma_pos);
    w.hi_sigma_pos = get_number(node, "hi_sigma_pos", w.hi_sigma_pos);
    w.vmin_sigma_pos = get_number(node, "vmin_sigma_pos", w.vmin_sigma_pos);
    w.vmax_sigma_pos = get_number(node, "vmax_sigma_pos", w.vmax_sigma_pos);
    w.mu = get_number(node, "mu", w.mu);
    w.nu = get_number(node, "nu", w.nu);
    w.v_sigma_yaw = get_number(node, "v_sigma_yaw", w.v_sigma_yaw);
    w.sigma_det = get_number(node, "sigma_det", w.sigma_det);
  }
  if (root.contains("association")) {
    const json& node = root.at("association");
    expect_keys(node, {"max_distance"}, "association");
    cfg.association.max_distance =
        get_number(node, "max_distance", cfg.association.max_distance);
  }
  if (root.contains("init")) {
    const json& node = root.at("init");
    expect_keys(node,
                {"min_spread", "cost_sigma_factor", "min_pairs",
                 "buffer_window"},
                "init");
    cfg.init.min_spread = get_number(node, "min_spread", cfg.init.min_spread);
    cfg.init.cost_sigma_factor =
        get_number(node, "cost_sigma_factor", cfg.init.cost_sigma_factor);
    if (node.contains("min_pairs"))
      cfg.init.min_pairs = node.at("min_pairs").get<int>();
    cfg.init.buffer_window =
        get_number(node, "buffer_window", cfg.init.buffer_window);
  }
  if (root.contains("solver")) {
    const json& node = root.at("solver");
    expect_keys(node, {"max_iterations", "initial_lambda"}, "solver");
    if (node.contains("max_iterations"))
      cfg.solver.max_iterations = node.at("max_iterations").get<int>();
    cfg.solver.initial_lambda =
        get_number(node, "initial_lambda", cfg.solver.initial_lambda);
  }
  cfg.tilt_sigma = get_number(root, "tilt_sigma", cfg.tilt_sigma);
  cfg.anchor_sigma = get_number(root, "anchor_sigma", cfg.anchor_sigma);
  if (root.contains("initial_prior_variances")) {
    const auto& node = root.at("initial_prior_variances");
    if (!node.is_array() || node.size() != 6)
      throw ConfigError("'initial_prior_variances' must have 6 entries");
    for (int i = 0; i < 6; ++i)
      cfg.initial_prior_variances(i) = node[i].get<double>();
  }
  // the detection noise drives the init acceptance gate
  cfg.init.sigma_det = cfg.weighting.sigma_det;
  cfg.validate();
  return cfg;
}

}  // namespace coopfuse::config
