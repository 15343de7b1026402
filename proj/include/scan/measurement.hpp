#pragma once

#include <span>

#include <Eigen/Core>

#include "scan/geometry.hpp"
#include "scan/scenario.hpp"
#include "scan/simulator.hpp"

namespace scan {

// Motion and observation models shared by the static solver and all filters.

/// Odometry propagation: heading increment first, then translation along the
/// new heading.
Pose process_model(const Pose& x, const OdometryIncrement& odo);

/// d(process_model)/d(x, y, theta).
Eigen::Matrix3d process_jacobian(const Pose& x, const OdometryIncrement& odo);

/// Predicted ranges to every beacon (spherical) or range differences of
/// beacons 2..I against beacon 1 (hyperbolic).
Eigen::VectorXd predict_measurement(Point2 p, std::span<const Beacon> beacons, double z_mr,
                                    PositioningMode mode);

inline Eigen::VectorXd measurement_model(const Pose& x, std::span<const Beacon> beacons,
                                         double z_mr, PositioningMode mode) {
  return predict_measurement(x.position(), beacons, z_mr, mode);
}

/// Partials of predict_measurement with respect to (x, y). Throws scan::Error
/// when the receiver coincides with a beacon.
Eigen::MatrixXd position_jacobian(Point2 p, std::span<const Beacon> beacons, double z_mr,
                                  PositioningMode mode);

/// Partials with respect to (x, y, theta); the theta column is identically 0.
Eigen::MatrixXd measurement_jacobian(const Pose& x, std::span<const Beacon> beacons, double z_mr,
                                     PositioningMode mode);

/// sigma^2 I for ranges; sigma^2 on the diagonal and sigma^2 / 2 off it for
/// range differences.
Eigen::MatrixXd measurement_noise(PositioningMode mode, double sigma, Eigen::Index dim);

inline Eigen::Index measurement_dim(PositioningMode mode, std::size_t beacons) {
  const auto n = static_cast<Eigen::Index>(beacons);
  return mode == PositioningMode::Spherical ? n : n - 1;
}

}  // namespace scan
