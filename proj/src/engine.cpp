#include "coopfuse/engine.hpp"

#include <algorithm>
#include <cmath>

namespace coopfuse::engine {
namespace {

// initialization attempts run after this many new buffered points per track
constexpr int kInitAttemptStride = 5;

Mat6 isotropic_cov(double sigma) {
  return Mat6::Identity() * (sigma * sigma);
}

}  // namespace

void RunConfig::validate() const {
  if (window_length <= 0.0)
    throw std::invalid_argument("window length must be positive");
  int detectors = 0;
  std::set<std::string> ids;
  for (const auto& robot : robots) {
    if (!ids.insert(robot.id).second)
      throw std::invalid_argument("duplicate robot id: " + robot.id);
    if (robot.detector) ++detectors;
  }
  if (detectors != 1)
    throw std::invalid_argument("exactly one detector robot is required");
}

std::string classify_nullspace(const graph::SingularSystemError& error) {
  const int nullity = static_cast<int>(error.nullspace.cols());
  if (nullity == 0) return "none";
  if (nullity >= 4) return "no-global-se3-prior";

  // mass of the nullspace per robot, split into tilt / yaw / translation
  std::map<std::string, Vec3> mass;
  for (size_t v = 0; v < error.variable_order.size(); ++v) {
    const auto& key = error.variable_order[v];
    for (int col = 0; col < nullity; ++col) {
      const Eigen::VectorXd block = error.nullspace.block<6, 1>(6 * v, col);
      Vec3& m = mass[key.robot];
      m(0) += block.head<2>().squaredNorm();            // roll/pitch
      m(1) += block(2) * block(2);                      // yaw
      m(2) += block.tail<3>().squaredNorm();            // translation
    }
  }
  double total = 0.0;
  double tilt_total = 0.0;
  std::string dominant_robot;
  double dominant_mass = -1.0;
  for (const auto& [robot, m] : mass) {
    const double robot_mass = m.sum();
    total += robot_mass;
    tilt_total += m(0);
    if (robot_mass > dominant_mass) {
      dominant_mass = robot_mass;
      dominant_robot = robot;
    }
  }
  if (total <= 0.0) return "unclassified";
  if (tilt_total / total > 0.5) return "no-tilt-prior";

  const Vec3& m = mass[dominant_robot];
  if (dominant_mass / total > 0.8) {
    if (m(1) / dominant_mass > 0.9)
      return "vio-degradation (yaw of robot " + dominant_robot +
             " unobservable)";
    if (m(1) > 1e-12 && m(2) > 1e-12)
      return "lio-degradation (yaw of robot " + dominant_robot +
             " mixed with translation perpendicular to the baseline)";
  }
  if (nullity == 1) {
    // equal yaw mass on one robot's whole timeline
    bool yaw_only = true;
    for (const auto& [robot, per_robot] : mass)
      if (per_robot(0) > 1e-12 || per_robot(2) > 1e-12) yaw_only = false;
    if (yaw_only) return "no-movement (common yaw shift unobservable)";
  }
  return "unclassified";
}

struct Engine::Impl {
  struct RobotState {
    RunConfig::Robot spec;
    bool initialized = false;
    bool started = false;
    sim::OdometrySample last_sample;
    std::deque<weighting::VioSample> vio_history;
    int bound_track = -1;
  };

  explicit Impl(RunConfig config)
      : cfg(std::move(config)), graph(cfg.window_length) {
    cfg.validate();
    for (const auto& robot : cfg.robots) {
      RobotState state;
      state.spec = robot;
      robots.emplace(robot.id, std::move(state));
      if (robot.detector) detector_id = robot.id;
    }
  }

  Mat6 tilt_cov() const { return isotropic_cov(cfg.tilt_sigma); }

  weighting::WeightingParams params_for(const RobotState& state) const {
    weighting::WeightingParams params = cfg.weighting;
    params.mu = state.spec.mu;
    return params;
  }

  void ingest_odometry(const std::string& robot_id,
                       const sim::OdometrySample& sample) {
    auto& state = robots.at(robot_id);
    const bool is_detector = state.spec.detector;

    if (is_detector) {
      lio_history.push_back(sample);
      if (!state.started) {
        // gauge choice: the detector's first pose is the world origin
        graph.add_anchored_variable(robot_id, Pose::identity(), sample.stamp,
                                    isotropic_cov(cfg.anchor_sigma), tilt_cov());
        world_from_lio = sample.pose.inverse();
        world_from_lio.stamp.reset();
        state.started = true;
        state.last_sample = sample;
        return;
      }
      const auto& prev = state.last_sample;
      const double dt = sample.stamp - prev.stamp;
      const bool prev_healthy = prev.min_eig >= cfg.weighting.lambda_thr;
      const bool cur_healthy = sample.min_eig >= cfg.weighting.lambda_thr;
      const Mat6 noise =
          weighting::lio_noise(prev_healthy, cur_healthy, dt, cfg.weighting);
      graph.add_odometry(robot_id, prev.pose.inverse() * sample.pose,
                         sample.stamp, noise, graph::FactorType::lio_relative,
                         tilt_cov());
      out.noise_log.push_back({sample.stamp, robot_id, "lio",
                               std::sqrt(noise(3, 3)), std::sqrt(noise(2, 2)),
                               0.0, false});
      state.last_sample = sample;
      after_insertion(sample.stamp);
      return;
    }

    weighting::VioSample vio;
    vio.pose = sample.pose.with_stamp(sample.stamp);
    vio.pos_cov = sample.pos_cov;
    vio.stamp = sample.stamp;
    state.vio_history.push_back(vio);
    trim_history(state.vio_history, sample.stamp);

    if (state.initialized && !graph.has_robot(robot_id)) {
      // the window slid past the whole timeline: back to buffering until a
      // fresh initialization
      state.initialized = false;
      if (state.bound_track >= 0) {
        bound_tracks.erase(state.bound_track);
        state.bound_track = -1;
      }
    }

    if (!state.initialized) {
      state.started = true;
      state.last_sample = sample;
      return;
    }

    const auto& prev = state.last_sample;
    weighting::VioSample prev_vio;
    prev_vio.pose = prev.pose.with_stamp(prev.stamp);
    prev_vio.pos_cov = prev.pos_cov;
    prev_vio.stamp = prev.stamp;
    const Mat6 noise = weighting::vio_noise(prev_vio, vio, params_for(state));
    graph.add_odometry(robot_id, prev.pose.inverse() * sample.pose,
                       sample.stamp, noise, graph::FactorType::vio_relative,
                       tilt_cov());
    out.noise_log.push_back(
        {sample.stamp, robot_id, "vio", std::sqrt(noise(3, 3)),
         std::sqrt(noise(2, 2)),
         weighting::wasserstein2(prev.pos_cov, sample.pos_cov), true});
    state.last_sample = sample;
    after_insertion(sample.stamp);
  }

  void ingest_detection(const sim::DetectionSample& detection) {
    pending.push_back(detection);
  }

  void after_insertion(double now) {
    flush_pending();
    run_solver(now);
  }

  void run_solver(double now) {
    graph::SolveReport report;
    try {
      report = graph.optimize(cfg.solver);
    } catch (const graph::SingularSystemError& error) {
      throw UnconstrainedGraphError(classify_nullspace(error),
                                    static_cast<int>(error.nullspace.cols()));
    }

    // estimates leaving the window are final
    const double cutoff = now - graph.window_length();
    for (const auto& [key, pose] : graph.variables())
      if (*pose.stamp < cutoff)
        out.trajectories[key.robot].push_back({*pose.stamp, pose});
    const int dropped = graph.slide_window(now);
    out.solve_log.push_back({now, report.iterations, report.initial_cost,
                             report.final_cost, report.converged, dropped});
  }

  void flush_pending() {
    while (!pending.empty()) {
      const sim::DetectionSample det = pending.front();
      const auto detector_bracket =
          graph.find_bracket(detector_id, det.stamp);
      if (!detector_bracket) {
        const auto newest = graph.latest_stamp(detector_id);
        if (!newest || det.stamp > *newest) break;  // wait for odometry
        out.assoc_log.push_back(
            {det.stamp, det.track_id, "stale", "", 0.0, false});
        pending.pop_front();
        continue;
      }

      // initialized robots whose timeline has not yet reached the detection
      // will bracket it soon; defer until every candidate can interpolate
      bool defer = false;
      std::vector<std::string> candidates;
      for (const auto& [id, state] : robots) {
        if (!state.initialized) continue;
        const auto newest = graph.latest_stamp(id);
        if (!newest) continue;  // deactivated by the window slide
        if (det.stamp > *newest) {
          defer = true;
          break;
        }
        if (graph.find_bracket(id, det.stamp)) candidates.push_back(id);
      }
      if (defer) break;

      const auto hit = assoc::associate(
          factors::DetectionMeasurement{det.position, det.stamp, det.track_id},
          detector_id, candidates, graph, cfg.association);
      if (hit) {
        const auto target_bracket = graph.find_bracket(hit->robot, det.stamp);
        graph.add_detection(
            factors::DetectionMeasurement{det.position, det.stamp,
                                          det.track_id},
            *detector_bracket, *target_bracket,
            weighting::detection_noise(cfg.weighting));
        out.assoc_log.push_back({det.stamp, det.track_id, "associated",
                                 hit->robot, hit->distance, true});
      } else if (bound_tracks.contains(det.track_id)) {
        out.assoc_log.push_back(
            {det.stamp, det.track_id, "rejected_gate", "", 0.0, false});
      } else {
        buffer_for_init(det);
      }
      pending.pop_front();
    }
  }

  void buffer_for_init(const sim::DetectionSample& det) {
    // compose into the detector's odometry frame from the raw LIO stream
    const Pose detector_local = interpolate_lio(det.stamp);
    auto& buffer = track_buffers[det.track_id];
    buffer.push_back({detector_local * det.position, det.stamp});
    while (!buffer.empty() &&
           buffer.front().stamp < det.stamp - cfg.init.buffer_window)
      buffer.erase(buffer.begin());
    out.assoc_log.push_back(
        {det.stamp, det.track_id, "buffered", "", 0.0, false});

    if (++points_since_attempt[det.track_id] >= kInitAttemptStride) {
      points_since_attempt[det.track_id] = 0;
      attempt_initialization(det.stamp);
    }
  }

  Pose interpolate_lio(double stamp) const {
    const auto upper = std::partition_point(
        lio_history.begin(), lio_history.end(),
        [&](const sim::OdometrySample& s) { return s.stamp < stamp; });
    if (upper == lio_history.begin()) return upper->pose;
    if (upper == lio_history.end()) return lio_history.back().pose;
    const auto lower = std::prev(upper);
    const double tau = (stamp - lower->stamp) / (upper->stamp - lower->stamp);
    return pose_interpolate(lower->pose, upper->pose, tau);
  }

  void attempt_initialization(double now) {
    std::vector<init::DetectionTrack> tracks;
    for (const auto& [track_id, points] : track_buffers) {
      if (bound_tracks.contains(track_id)) continue;
      init::DetectionTrack track;
      track.track_id = track_id;
      track.points_local = points;
      tracks.push_back(std::move(track));
    }
    if (tracks.empty()) return;

    for (auto& [id, state] : robots) {
      if (state.spec.detector || state.initialized) continue;
      if (state.vio_history.empty()) continue;
      const auto result = init::try_initialize(id, state.vio_history, tracks,
                                               world_from_lio, cfg.init);
      if (!result) continue;

      graph.add_anchored_variable(id, result->prior_pose, result->prior_stamp,
                                  cfg.initial_prior_variances.asDiagonal(),
                                  tilt_cov());
      state.initialized = true;
      state.bound_track = result->track_id;
      bound_tracks.insert(result->track_id);
      // odometry resumes from the newest sample, which the prior anchors
      const auto& anchor_sample = state.vio_history.back();
      state.last_sample.stamp = anchor_sample.stamp;
      state.last_sample.pose = anchor_sample.pose;
      state.last_sample.pos_cov = anchor_sample.pos_cov;
      state.last_sample.has_min_eig = false;
      track_buffers.erase(result->track_id);
      std::erase_if(tracks, [&](const init::DetectionTrack& t) {
        return t.track_id == result->track_id;
      });
      out.init_log.push_back({now, id, result->track_id, result->cost_per_pair,
                              result->yaw, result->pairs});
    }
  }

  void trim_history(std::deque<weighting::VioSample>& history,
                    double now) const {
    const double horizon = cfg.init.buffer_window + 10.0;
    while (!history.empty() && history.front().stamp < now - horizon)
      history.pop_front();
  }

  void finish() {
    flush_pending();
    for (const auto& det : pending)
      out.assoc_log.push_back(
          {det.stamp, det.track_id, "unprocessed_at_end", "", 0.0, false});
    pending.clear();
    for (const auto& [key, pose] : graph.variables())
      out.trajectories[key.robot].push_back({*pose.stamp, pose});
    for (auto& [robot, trajectory] : out.trajectories)
      std::sort(trajectory.begin(), trajectory.end(),
                [](const eval::StampedPose& a, const eval::StampedPose& b) {
                  return a.stamp < b.stamp;
                });
  }

  RunConfig cfg;
  graph::FactorGraph graph;
  std::map<std::string, RobotState> robots;
  std::string detector_id;
  Pose world_from_lio;
  std::deque<sim::OdometrySample> lio_history;
  std::map<int, std::vector<init::TimedPoint>> track_buffers;
  std::map<int, int> points_since_attempt;
  std::set<int> bound_tracks;
  std::deque<sim::DetectionSample> pending;
  EngineOutputs out;
};

Engine::Engine(RunConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

void Engine::ingest_odometry(const std::string& robot,
                             const sim::OdometrySample& sample) {
  impl_->ingest_odometry(robot, sample);
}

void Engine::ingest_detection(const sim::DetectionSample& detection) {
  impl_->ingest_detection(detection);
}

void Engine::finish() { impl_->finish(); }

EngineOutputs Engine::take_outputs() { return std::move(impl_->out); }

const graph::FactorGraph& Engine::factor_graph() const { return impl_->graph; }

EngineOutputs run_engine(const RunConfig& config, const StreamBundle& streams) {
  // content-based ordering: shuffled input rows with identical stamps
  // produce identical output
  StreamBundle sorted = streams;
  for (auto& [robot, samples] : sorted.odometry)
    std::sort(samples.begin(), samples.end(),
              [](const sim::OdometrySample& a, const sim::OdometrySample& b) {
                return a.stamp < b.stamp;
              });
  std::sort(sorted.detections.begin(), sorted.detections.end(),
            [](const sim::DetectionSample& a, const sim::DetectionSample& b) {
              if (a.stamp != b.stamp) return a.stamp < b.stamp;
              if (a.track_id != b.track_id) return a.track_id < b.track_id;
              return std::lexicographical_compare(
                  a.position.data(), a.position.data() + 3, b.position.data(),
                  b.position.data() + 3);
            });

  struct Event {
    double stamp;
    int kind;  // odometry before detections on stamp ties
    std::string robot;
    size_t index;
  };
  std::vector<Event> events;
  for (const auto& [robot, samples] : sorted.odometry)
    for (size_t i = 0; i < samples.size(); ++i)
      events.push_back({samples[i].stamp, 0, robot, i});
  for (size_t i = 0; i < sorted.detections.size(); ++i)
    events.push_back({sorted.detections[i].stamp, 1, "", i});
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) {
                     if (a.stamp != b.stamp) return a.stamp < b.stamp;
                     if (a.kind != b.kind) return a.kind < b.kind;
                     return a.robot < b.robot;
                   });

  Engine engine(config);
  for (const auto& event : events) {
    if (event.kind == 0)
      engine.ingest_odometry(event.robot,
                             sorted.odometry.at(event.robot)[event.index]);
    else
      engine.ingest_detection(sorted.detections[event.index]);
  }
  engine.finish();
  return engine.take_outputs();
}

}  // namespace coopfuse::engine
