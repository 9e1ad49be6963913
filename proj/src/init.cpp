#include "coopfuse/init.hpp"

#include <algorithm>
#include <cmath>

namespace coopfuse::init {
namespace {

double xy_spread(const std::vector<Vec3>& centered) {
  double max_dist = 0.0;
  for (size_t i = 0; i < centered.size(); ++i)
    for (size_t j = i + 1; j < centered.size(); ++j)
      max_dist = std::max(
          max_dist, (centered[i].head<2>() - centered[j].head<2>()).norm());
  return max_dist;
}

std::optional<Vec3> interpolate_position(
    const std::deque<weighting::VioSample>& history, double stamp) {
  if (history.empty() || stamp < history.front().stamp ||
      stamp > history.back().stamp)
    return std::nullopt;
  const auto upper = std::partition_point(
      history.begin(), history.end(),
      [&](const weighting::VioSample& s) { return s.stamp < stamp; });
  if (upper == history.begin()) return upper->pose.translation;
  const auto lower = std::prev(upper);
  if (upper == history.end()) return lower->pose.translation;
  const double span = upper->stamp - lower->stamp;
  const double alpha = span > 0.0 ? (stamp - lower->stamp) / span : 0.0;
  return lower->pose.translation +
         alpha * (upper->pose.translation - lower->pose.translation);
}

}  // namespace

AlignmentResult align_yaw_translation(const std::vector<Vec3>& src,
                                      const std::vector<Vec3>& dst,
                                      const InitConfig& config) {
  if (src.size() != dst.size() || src.size() < 2)
    throw std::invalid_argument("alignment needs two equally sized point sets");

  Vec3 src_mean = Vec3::Zero();
  Vec3 dst_mean = Vec3::Zero();
  for (const auto& p : src) src_mean += p;
  for (const auto& p : dst) dst_mean += p;
  src_mean /= static_cast<double>(src.size());
  dst_mean /= static_cast<double>(dst.size());

  std::vector<Vec3> centered_src;
  centered_src.reserve(src.size());
  for (const auto& p : src) centered_src.push_back(p - src_mean);
  const double spread = xy_spread(centered_src);
  if (spread < config.min_spread) throw DegenerateSpreadError(spread);

  double sin_sum = 0.0;
  double cos_sum = 0.0;
  for (size_t i = 0; i < src.size(); ++i) {
    const Vec3 s = centered_src[i];
    const Vec3 d = dst[i] - dst_mean;
    cos_sum += s.x() * d.x() + s.y() * d.y();
    sin_sum += s.x() * d.y() - s.y() * d.x();
  }
  const double yaw = std::atan2(sin_sum, cos_sum);

  AlignmentResult result;
  result.transform =
      Pose(so3_exp(Vec3(0, 0, yaw)), dst_mean - so3_exp(Vec3(0, 0, yaw)) * src_mean);
  result.pairs = static_cast<int>(src.size());
  for (size_t i = 0; i < src.size(); ++i)
    result.cost += (result.transform * src[i] - dst[i]).squaredNorm();
  const double gate = config.cost_sigma_factor * config.sigma_det;
  result.accepted = result.cost / result.pairs < gate * gate;
  return result;
}

std::optional<InitResult> try_initialize(
    const std::string& robot,
    const std::deque<weighting::VioSample>& odometry_history,
    const std::vector<DetectionTrack>& candidate_tracks,
    const Pose& world_from_detector_local, const InitConfig& config) {
  if (odometry_history.empty()) return std::nullopt;

  std::optional<InitResult> best;
  std::optional<AlignmentResult> best_alignment;
  for (const auto& track : candidate_tracks) {
    std::vector<Vec3> src;
    std::vector<Vec3> dst;
    for (const auto& timed : track.points_local) {
      const auto vio_position =
          interpolate_position(odometry_history, timed.stamp);
      if (!vio_position) continue;
      src.push_back(*vio_position);
      dst.push_back(timed.point);
    }
    if (static_cast<int>(src.size()) < config.min_pairs) continue;

    AlignmentResult alignment;
    try {
      alignment = align_yaw_translation(src, dst, config);
    } catch (const DegenerateSpreadError&) {
      continue;
    }
    if (!alignment.accepted) continue;
    if (best_alignment &&
        alignment.cost / alignment.pairs >=
            best_alignment->cost / best_alignment->pairs)
      continue;

    InitResult result;
    result.robot = robot;
    result.track_id = track.track_id;
    result.world_from_odometry =
        world_from_detector_local * alignment.transform;
    result.prior_stamp = odometry_history.back().stamp;
    result.prior_pose =
        result.world_from_odometry * odometry_history.back().pose;
    result.prior_pose.stamp = result.prior_stamp;
    result.cost_per_pair = alignment.cost / alignment.pairs;
    result.yaw = rotation_yaw(alignment.transform.rotation);
    result.pairs = alignment.pairs;
    best = result;
    best_alignment = alignment;
  }
  return best;
}

}  // namespace coopfuse::init
