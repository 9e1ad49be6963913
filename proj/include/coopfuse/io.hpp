#pragma once

#include "coopfuse/eval.hpp"
#include "coopfuse/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coopfuse::io {

struct DataError : std::runtime_error {
  DataError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

/// 17 significant digits: round-trips doubles exactly in decimal.
std::string format_double(double value);

// Odometry CSV: stamp_s, qw, qx, qy, qz, tx, ty, tz, c00..c55 (row-major 6x6,
// only the positional block is meaningful and only for VIO), min_eig (LIO
// only, empty otherwise).
void write_odometry_csv(const std::filesystem::path& path,
                        const std::vector<sim::OdometrySample>& samples);
std::vector<sim::OdometrySample> read_odometry_csv(
    const std::filesystem::path& path);

// Detection CSV: stamp_s, track_id, dx, dy, dz.
void write_detections_csv(const std::filesystem::path& path,
                          const std::vector<sim::DetectionSample>& detections);
std::vector<sim::DetectionSample> read_detections_csv(
    const std::filesystem::path& path);

// Trajectory CSV (ground truth and estimates): stamp_s, qw..qz, tx..tz.
void write_trajectory_csv(const std::filesystem::path& path,
                          const eval::Trajectory& trajectory);
eval::Trajectory read_trajectory_csv(const std::filesystem::path& path);

uint64_t fnv1a_file(const std::filesystem::path& path);

}  // namespace coopfuse::io
