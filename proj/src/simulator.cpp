#include "scan/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace scan {

const UsObservation* MeasurementFrame::find(std::string_view ulps_id) const {
  for (const auto& o : observations) {
    if (o.ulps_id == ulps_id) return &o;
  }
  return nullptr;
}

std::vector<Pose> generate_trajectory(const ScenarioConfig& config) {
  if (!(config.speed > 0.0)) throw SimulationError("speed must be positive");
  const auto& wp = config.waypoints;
  if (wp.empty()) throw SimulationError("no waypoints");

  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < wp.size(); ++i) {
    cumulative.push_back(cumulative.back() + distance(wp[i - 1], wp[i]));
  }
  const double total = cumulative.back();

  auto point_at = [&](double s) -> Point2 {
    for (std::size_t i = 1; i < wp.size(); ++i) {
      const double len = cumulative[i] - cumulative[i - 1];
      if (s <= cumulative[i] || i + 1 == wp.size()) {
        if (len <= 0.0) return wp[i];
        const double t = std::clamp((s - cumulative[i - 1]) / len, 0.0, 1.0);
        return {wp[i - 1].x + t * (wp[i].x - wp[i - 1].x),
                wp[i - 1].y + t * (wp[i].y - wp[i - 1].y)};
      }
    }
    return wp.back();
  };

  std::vector<Point2> points;
  const auto steps = static_cast<long>(std::floor(total / config.speed + 1e-9));
  for (long k = 0; k <= steps; ++k) points.push_back(point_at(static_cast<double>(k) * config.speed));
  if (total - static_cast<double>(steps) * config.speed > 1e-9) points.push_back(wp.back());

  double first_heading = 0.0;
  for (std::size_t i = 1; i < wp.size(); ++i) {
    if (distance(wp[i - 1], wp[i]) > 0.0) {
      first_heading = std::atan2(wp[i].y - wp[i - 1].y, wp[i].x - wp[i - 1].x);
      break;
    }
  }

  std::vector<Pose> poses;
  poses.reserve(points.size());
  poses.emplace_back(points[0].x, points[0].y, first_heading);
  for (std::size_t k = 1; k < points.size(); ++k) {
    const double heading =
        std::atan2(points[k].y - points[k - 1].y, points[k].x - points[k - 1].x);
    poses.emplace_back(points[k].x, points[k].y, heading);
  }
  return poses;
}

OdometryIncrement measure_odometry(const Pose& prev, const Pose& curr, const NoiseParams& noise,
                                   Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  OdometryIncrement inc;
  inc.delta_d = distance(prev.position(), curr.position());
  inc.delta_theta = wrap_angle(curr.theta() - prev.theta());
  // Draws happen even at zero sigma so that the stream layout is independent of
  // which noise sources are enabled.
  inc.delta_d += noise.sigma_d_odo * gauss(rng);
  inc.delta_theta += noise.sigma_theta_odo * gauss(rng);
  return inc;
}

std::vector<double> true_ranges(Point2 p, std::span<const Beacon> beacons, double z_mr) {
  std::vector<double> out;
  out.reserve(beacons.size());
  for (const auto& b : beacons) {
    const double dx = p.x - b.x;
    const double dy = p.y - b.y;
    const double dz = z_mr - b.z;
    out.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return out;
}

UsObservation measure_ultrasound(const Pose& p, const UlpsDescriptor& u, double z_mr,
                                 PositioningMode mode, const NoiseParams& noise, Rng& rng) {
  if (!in_coverage(p.position(), u)) {
    throw SimulationError("receiver outside coverage of cluster " + u.id);
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto ranges = true_ranges(p.position(), u.global_beacons(), z_mr);
  for (auto& r : ranges) r += noise.sigma_us * gauss(rng);

  UsObservation obs;
  obs.ulps_id = u.id;
  if (mode == PositioningMode::Spherical) {
    obs.values = std::move(ranges);
  } else {
    for (std::size_t i = 1; i < ranges.size(); ++i) obs.values.push_back(ranges[i] - ranges[0]);
  }
  return obs;
}

std::vector<MeasurementFrame> simulate(const ScenarioConfig& config) {
  const auto poses = generate_trajectory(config);
  Rng rng(config.seed);

  std::vector<MeasurementFrame> frames;
  frames.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    MeasurementFrame f;
    f.epoch = static_cast<int>(k);
    f.true_pose = poses[k];
    if (k > 0) f.odo = measure_odometry(poses[k - 1], poses[k], config.noise, rng);
    for (const auto& u : config.ulps_list) {
      if (in_coverage(poses[k].position(), u)) {
        f.observations.push_back(
            measure_ultrasound(poses[k], u, config.z_mr, config.mode, config.noise, rng));
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

nlohmann::json frame_to_json(const MeasurementFrame& f) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : f.observations) obs.push_back({{"ulps_id", o.ulps_id}, {"values", o.values}});
  return {{"epoch", f.epoch},
          {"odo", {{"delta_d", f.odo.delta_d}, {"delta_theta", f.odo.delta_theta}}},
          {"true_pose", {{"x", f.true_pose.x}, {"y", f.true_pose.y}, {"theta", f.true_pose.theta()}}},
          {"observations", obs}};
}

MeasurementFrame frame_from_json(const nlohmann::json& j) {
  MeasurementFrame f;
  f.epoch = j.at("epoch").get<int>();
  f.odo.delta_d = j.at("odo").at("delta_d").get<double>();
  f.odo.delta_theta = j.at("odo").at("delta_theta").get<double>();
  const auto& tp = j.at("true_pose");
  f.true_pose = Pose(tp.at("x").get<double>(), tp.at("y").get<double>(),
                     tp.at("theta").get<double>());
  for (const auto& o : j.at("observations")) {
    f.observations.push_back(
        {o.at("ulps_id").get<std::string>(), o.at("values").get<std::vector<double>>()});
  }
  return f;
}

}  // namespace scan
