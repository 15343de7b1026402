#include "scan/measurement.hpp"

#include <cmath>

namespace scan {

Pose process_model(const Pose& x, const OdometryIncrement& odo) {
  const double heading = x.theta() + odo.delta_theta;
  return Pose(x.x + odo.delta_d * std::cos(heading), x.y + odo.delta_d * std::sin(heading),
              heading, x.frame);
}

Eigen::Matrix3d process_jacobian(const Pose& x, const OdometryIncrement& odo) {
  const double heading = x.theta() + odo.delta_theta;
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  a(0, 2) = -odo.delta_d * std::sin(heading);
  a(1, 2) = odo.delta_d * std::cos(heading);
  return a;
}

Eigen::VectorXd predict_measurement(Point2 p, std::span<const Beacon> beacons, double z_mr,
                                    PositioningMode mode) {
  const auto n = static_cast<Eigen::Index>(beacons.size());
  Eigen::VectorXd ranges(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = beacons[static_cast<std::size_t>(i)];
    const double dx = p.x - b.x;
    const double dy = p.y - b.y;
    const double dz = z_mr - b.z;
    ranges(i) = std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  if (mode == PositioningMode::Spherical) return ranges;
  if (n < 2) return Eigen::VectorXd(0);
  return ranges.tail(n - 1).array() - ranges(0);
}

Eigen::MatrixXd position_jacobian(Point2 p, std::span<const Beacon> beacons, double z_mr,
                                  PositioningMode mode) {
  const auto n = static_cast<Eigen::Index>(beacons.size());
  Eigen::MatrixXd rows(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = beacons[static_cast<std::size_t>(i)];
    const double dx = p.x - b.x;
    const double dy = p.y - b.y;
    const double dz = z_mr - b.z;
    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (d == 0.0) throw Error("measurement jacobian undefined: receiver at a beacon");
    rows(i, 0) = dx / d;
    rows(i, 1) = dy / d;
  }
  if (mode == PositioningMode::Spherical) return rows;
  if (n < 2) return Eigen::MatrixXd(0, 2);
  Eigen::MatrixXd diff = rows.bottomRows(n - 1);
  diff.rowwise() -= rows.row(0);
  return diff;
}

Eigen::MatrixXd measurement_jacobian(const Pose& x, std::span<const Beacon> beacons, double z_mr,
                                     PositioningMode mode) {
  const Eigen::MatrixXd jp = position_jacobian(x.position(), beacons, z_mr, mode);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(jp.rows(), 3);
  h.leftCols(2) = jp;
  return h;
}

Eigen::MatrixXd measurement_noise(PositioningMode mode, double sigma, Eigen::Index dim) {
  const double var = sigma * sigma;
  if (mode == PositioningMode::Spherical) return var * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(dim, dim, 0.5 * var);
  r.diagonal().setConstant(var);
  return r;
}

}  // namespace scan
