#include "coopfuse/io.hpp"

#include <Eigen/Geometry>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace coopfuse::io {
namespace {

std::string quaternion_fields(const Mat3& rotation) {
  Eigen::Quaterniond q(rotation);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return format_double(q.w()) + "," + format_double(q.x()) + "," +
         format_double(q.y()) + "," + format_double(q.z());
}

Mat3 rotation_from_fields(const std::vector<std::string>& fields, int offset) {
  const Eigen::Quaterniond q(std::stod(fields[offset]),
                             std::stod(fields[offset + 1]),
                             std::stod(fields[offset + 2]),
                             std::stod(fields[offset + 3]));
  return q.normalized().toRotationMatrix();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, size_t expected_fields,
    const std::string& expected_header) {
  std::ifstream in(path);
  if (!in)
    throw DataError(path.string(), 0, "cannot open file");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line != expected_header)
        throw DataError(path.string(), 1, "unexpected header: " + line);
      continue;
    }
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != expected_fields)
      throw DataError(path.string(), line_number,
                      "expected " + std::to_string(expected_fields) +
                          " fields, found " + std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

constexpr const char* kOdometryHeader =
    "stamp_s,qw,qx,qy,qz,tx,ty,tz,"
    "c00,c01,c02,c03,c04,c05,c10,c11,c12,c13,c14,c15,"
    "c20,c21,c22,c23,c24,c25,c30,c31,c32,c33,c34,c35,"
    "c40,c41,c42,c43,c44,c45,c50,c51,c52,c53,c54,c55,min_eig";
constexpr const char* kDetectionHeader = "stamp_s,track_id,dx,dy,dz";
constexpr const char* kTrajectoryHeader = "stamp_s,qw,qx,qy,qz,tx,ty,tz";

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_odometry_csv(const std::filesystem::path& path,
                        const std::vector<sim::OdometrySample>& samples) {
  std::ofstream out(path);
  out << kOdometryHeader << "\n";
  for (const auto& sample : samples) {
    Mat6 cov = Mat6::Zero();
    if (!sample.has_min_eig)
      cov.bottomRightCorner<3, 3>() = sample.pos_cov;
    out << format_double(sample.stamp) << ","
        << quaternion_fields(sample.pose.rotation) << ","
        << format_double(sample.pose.translation.x()) << ","
        << format_double(sample.pose.translation.y()) << ","
        << format_double(sample.pose.translation.z());
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) out << "," << format_double(cov(r, c));
    out << ",";
    if (sample.has_min_eig) out << format_double(sample.min_eig);
    out << "\n";
  }
}

std::vector<sim::OdometrySample> read_odometry_csv(
    const std::filesystem::path& path) {
  std::vector<sim::OdometrySample> samples;
  for (const auto& fields : read_csv(path, 45, kOdometryHeader)) {
    sim::OdometrySample sample;
    sample.stamp = std::stod(fields[0]);
    sample.pose = Pose(rotation_from_fields(fields, 1),
                       Vec3(std::stod(fields[5]), std::stod(fields[6]),
                            std::stod(fields[7])),
                       sample.stamp);
    Mat6 cov;
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) cov(r, c) = std::stod(fields[8 + 6 * r + c]);
    sample.pos_cov = cov.bottomRightCorner<3, 3>();
    sample.has_min_eig = !fields[44].empty();
    if (sample.has_min_eig) sample.min_eig = std::stod(fields[44]);
    samples.push_back(sample);
  }
  return samples;
}

void write_detections_csv(const std::filesystem::path& path,
                          const std::vector<sim::DetectionSample>& detections) {
  std::ofstream out(path);
  out << kDetectionHeader << "\n";
  for (const auto& det : detections)
    out << format_double(det.stamp) << "," << det.track_id << ","
        << format_double(det.position.x()) << ","
        << format_double(det.position.y()) << ","
        << format_double(det.position.z()) << "\n";
}

std::vector<sim::DetectionSample> read_detections_csv(
    const std::filesystem::path& path) {
  std::vector<sim::DetectionSample> detections;
  for (const auto& fields : read_csv(path, 5, kDetectionHeader)) {
    sim::DetectionSample det;
    det.stamp = std::stod(fields[0]);
    det.track_id = std::stoi(fields[1]);
    det.position = Vec3(std::stod(fields[2]), std::stod(fields[3]),
                        std::stod(fields[4]));
    detections.push_back(det);
  }
  return detections;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const eval::Trajectory& trajectory) {
  std::ofstream out(path);
  out << kTrajectoryHeader << "\n";
  for (const auto& point : trajectory)
    out << format_double(point.stamp) << ","
        << quaternion_fields(point.pose.rotation) << ","
        << format_double(point.pose.translation.x()) << ","
        << format_double(point.pose.translation.y()) << ","
        << format_double(point.pose.translation.z()) << "\n";
}

eval::Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  eval::Trajectory trajectory;
  for (const auto& fields : read_csv(path, 8, kTrajectoryHeader)) {
    eval::StampedPose point;
    point.stamp = std::stod(fields[0]);
    point.pose = Pose(rotation_from_fields(fields, 1),
                      Vec3(std::stod(fields[5]), std::stod(fields[6]),
                           std::stod(fields[7])),
                      point.stamp);
    trajectory.push_back(point);
  }
  return trajectory;
}

uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  uint64_t hash = 1469598103934665603ull;
  char byte;
  while (in.get(byte)) {
    hash ^= static_cast<unsigned char>(byte);
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace coopfuse::io
