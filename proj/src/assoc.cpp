#include "coopfuse/assoc.hpp"

#include <algorithm>

namespace coopfuse::assoc {

std::optional<Association> associate(
    const factors::DetectionMeasurement& detection,
    const std::string& detector_robot,
    const std::vector<std::string>& candidate_robots,
    const graph::FactorGraph& graph, const AssociationConfig& config) {
  const auto detector_bracket =
      graph.find_bracket(detector_robot, detection.stamp);
  if (!detector_bracket) return std::nullopt;
  const Pose detector_a = graph.variable(detector_bracket->first);
  const Pose detector_b = graph.variable(detector_bracket->second);
  const double tx0 = *detector_a.stamp;
  const double tx1 = *detector_b.stamp;
  const Pose detector_pose = pose_interpolate(
      detector_a, detector_b, (detection.stamp - tx0) / (tx1 - tx0));

  std::vector<std::string> candidates = candidate_robots;
  std::sort(candidates.begin(), candidates.end());

  std::optional<Association> best;
  for (const auto& robot : candidates) {
    const auto bracket = graph.find_bracket(robot, detection.stamp);
    if (!bracket) continue;
    const Pose y_a = graph.variable(bracket->first);
    const Pose y_b = graph.variable(bracket->second);
    const double ty0 = *y_a.stamp;
    const double ty1 = *y_b.stamp;
    const Pose target_pose =
        pose_interpolate(y_a, y_b, (detection.stamp - ty0) / (ty1 - ty0));
    const Vec3 predicted =
        detector_pose.rotation.transpose() *
        (target_pose.translation - detector_pose.translation);
    const double distance = (predicted - detection.position).norm();
    if (!best || distance < best->distance) best = Association{robot, distance};
  }
  if (best && best->distance < config.max_distance) return best;
  return std::nullopt;
}

}  // namespace coopfuse::assoc
