#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scan/geometry.hpp"

namespace scan {

class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// Ceiling-mounted ultrasonic emitter.
struct Beacon {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point2 floor() const { return {x, y}; }
  friend bool operator==(const Beacon&, const Beacon&) = default;
};

enum class ClusterKind { GloballyReferenced, LocallyReferenced };
enum class PositioningMode { Spherical, Hyperbolic };

std::string_view to_string(ClusterKind kind);
std::string_view to_string(PositioningMode mode);
PositioningMode parse_mode(std::string_view text);

/// Minimum beacon count a cluster needs to produce a position fix.
inline std::size_t min_beacons(PositioningMode mode) {
  return mode == PositioningMode::Spherical ? 3 : 4;
}

/// One beacon cluster (ULPS).
///
/// For globally referenced clusters `beacons` holds global coordinates. For
/// locally referenced clusters `beacons` holds the cluster's own local frame and
/// `truth_beacons` the global positions the simulator measures against; the
/// estimation pipeline never reads `truth_beacons` or `coverage_center` of a
/// locally referenced cluster.
struct UlpsDescriptor {
  std::string id;
  ClusterKind kind = ClusterKind::GloballyReferenced;
  std::vector<Beacon> beacons;
  std::vector<Beacon> truth_beacons;
  Point2 coverage_center;
  double coverage_radius = 5.0;

  bool is_global() const { return kind == ClusterKind::GloballyReferenced; }
  /// Beacons expressed in the global frame (ground truth for LR clusters).
  const std::vector<Beacon>& global_beacons() const {
    return is_global() ? beacons : truth_beacons;
  }

  friend bool operator==(const UlpsDescriptor&, const UlpsDescriptor&) = default;
};

struct NoiseParams {
  double sigma_d_odo = 0.03;      // m per epoch
  double sigma_theta_odo = 0.02;  // rad per epoch
  double sigma_us = 0.005;        // m per range

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

struct UkfParams {
  double alpha = 0.001;
  double beta = 2.0;
  double kappa = 0.0;

  friend bool operator==(const UkfParams&, const UkfParams&) = default;
};

/// Tuning shared by every filter in a run. Unset noise levels are derived from
/// the sensor model: Q from the odometry sigmas, the initial covariance from the
/// geometry of the two bootstrap fixes.
struct FilterTuning {
  std::optional<double> sigma_w_xy;     // process noise std, m per epoch
  std::optional<double> sigma_w_theta;  // process noise std, rad per epoch
  /// Lower bound on the range std fed to R; keeps R invertible for noise-free runs.
  double min_sigma_v = 1e-6;
  std::optional<double> init_sigma_xy;
  std::optional<double> init_sigma_theta;
  UkfParams ukf;
  double hinf_gamma = 0.2;

  friend bool operator==(const FilterTuning&, const FilterTuning&) = default;
};

struct ScenarioConfig {
  std::vector<UlpsDescriptor> ulps_list;
  std::vector<Point2> waypoints;
  double speed = 0.1;  // m per epoch
  double z_mr = 0.5;
  NoiseParams noise;
  PositioningMode mode = PositioningMode::Spherical;
  double d_min = 2.5;
  std::uint64_t seed = 1;
  int inverse_correct_count = 3;
  int max_points = 10;
  FilterTuning filter;

  const UlpsDescriptor* find(std::string_view id) const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Corners of an axis-aligned square of the given diagonal, centred on
/// `center`, all at `height`; optionally a fifth beacon at the centre.
std::vector<Beacon> make_square_cluster(Point2 center, double diagonal, double height,
                                        bool with_center = false);

/// Floor coverage test, boundary inclusive.
bool in_coverage(Point2 p, const UlpsDescriptor& u);

/// Throws ScenarioError naming the offending field.
void validate(const ScenarioConfig& config);

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

/// Two globally referenced clusters joined by an L-shaped corridor with seven
/// locally referenced clusters along it. The layout approximates a building
/// floor plan; it is not a survey of any real site.
ScenarioConfig default_scenario();

}  // namespace scan
