#pragma once

#include "coopfuse/factors.hpp"
#include "coopfuse/graph.hpp"

#include <optional>
#include <string>
#include <vector>

namespace coopfuse::assoc {

struct AssociationConfig {
  double max_distance = 1.0;  // [m] gate on the detection residual norm
};

struct Association {
  std::string robot;
  double distance = 0.0;
};

/// Anonymous association: the detection goes to the robot whose interpolated
/// estimate predicts it best, if that residual distance passes the gate.
/// Candidates without bracketing variables around the stamp are skipped;
/// ties break toward the lower robot id. Returns nullopt when no candidate
/// passes (the detection is then an initialization sample or a false
/// positive).
std::optional<Association> associate(
    const factors::DetectionMeasurement& detection,
    const std::string& detector_robot,
    const std::vector<std::string>& candidate_robots,
    const graph::FactorGraph& graph, const AssociationConfig& config);

}  // namespace coopfuse::assoc
