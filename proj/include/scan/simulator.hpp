#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scan/scenario.hpp"

namespace scan {

class SimulationError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

struct OdometryIncrement {
  double delta_d = 0.0;
  double delta_theta = 0.0;

  friend bool operator==(const OdometryIncrement&, const OdometryIncrement&) = default;
};

/// Ranges (spherical) or range differences against beacon 1 (hyperbolic)
/// reported by one cluster in one epoch.
struct UsObservation {
  std::string ulps_id;
  std::vector<double> values;

  friend bool operator==(const UsObservation&, const UsObservation&) = default;
};

struct MeasurementFrame {
  int epoch = 0;
  OdometryIncrement odo;
  Pose true_pose;
  std::vector<UsObservation> observations;

  const UsObservation* find(std::string_view ulps_id) const;

  friend bool operator==(const MeasurementFrame&, const MeasurementFrame&) = default;
};

/// Samples the waypoint polyline every `speed` metres of arc length. The
/// heading of each pose is the direction of travel from the previous sample;
/// the first pose takes the direction of the first segment.
std::vector<Pose> generate_trajectory(const ScenarioConfig& config);

OdometryIncrement measure_odometry(const Pose& prev, const Pose& curr, const NoiseParams& noise,
                                   Rng& rng);

/// Noise-free 3D ranges from a floor point at receiver height to each beacon.
std::vector<double> true_ranges(Point2 p, std::span<const Beacon> beacons, double z_mr);

/// Hyperbolic values are differences of the same noisy ranges, so their noise
/// is correlated exactly as the hyperbolic measurement covariance assumes.
UsObservation measure_ultrasound(const Pose& p, const UlpsDescriptor& u, double z_mr,
                                 PositioningMode mode, const NoiseParams& noise, Rng& rng);

/// One frame per trajectory pose; frame 0 carries zero odometry. Deterministic
/// in `config.seed`.
std::vector<MeasurementFrame> simulate(const ScenarioConfig& config);

nlohmann::json frame_to_json(const MeasurementFrame& frame);
MeasurementFrame frame_from_json(const nlohmann::json& j);

}  // namespace scan
