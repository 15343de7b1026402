#include "scan/positioning.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "scan/measurement.hpp"

namespace scan {

Point2 beacon_centroid(std::span<const Beacon> beacons) {
  Point2 c;
  if (beacons.empty()) return c;
  for (const auto& b : beacons) {
    c.x += b.x;
    c.y += b.y;
  }
  c.x /= static_cast<double>(beacons.size());
  c.y /= static_cast<double>(beacons.size());
  return c;
}

double fix_cost(std::span<const double> values, std::span<const Beacon> beacons, double z_mr,
                PositioningMode mode, Point2 p) {
  const Eigen::VectorXd predicted = predict_measurement(p, beacons, z_mr, mode);
  double cost = 0.0;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    const double r = values[static_cast<std::size_t>(i)] - predicted(i);
    cost += r * r;
  }
  return cost;
}

namespace {

double condition_number(const Eigen::Matrix2d& n) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(n);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

struct Attempt {
  StaticFix fix;
  bool singular = false;
};

Attempt solve(std::span<const double> values, std::span<const Beacon> beacons, double z_mr,
              PositioningMode mode, Point2 guess, const GaussNewtonOptions& opt, bool damped) {
  Attempt a;
  Point2 p = guess;
  const auto dim = static_cast<Eigen::Index>(values.size());
  Eigen::VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z(i) = values[static_cast<std::size_t>(i)];

  for (int it = 1; it <= opt.max_iterations; ++it) {
    a.fix.iterations = it;
    const Eigen::VectorXd r = z - predict_measurement(p, beacons, z_mr, mode);
    const Eigen::MatrixXd j = position_jacobian(p, beacons, z_mr, mode);
    Eigen::Matrix2d normal = j.transpose() * j;
    if (condition_number(normal) > opt.max_condition) {
      if (!damped) {
        a.singular = true;
        return a;
      }
      normal += opt.damping * Eigen::Matrix2d::Identity();
    }
    const Eigen::Vector2d step = normal.ldlt().solve(j.transpose() * r);
    if (!step.allFinite()) {
      a.singular = true;
      return a;
    }
    p.x += step.x();
    p.y += step.y();
    if (step.norm() < opt.step_tolerance) {
      a.fix.converged = true;
      break;
    }
  }
  const Eigen::MatrixXd j = position_jacobian(p, beacons, z_mr, mode);
  const Eigen::Matrix2d normal = j.transpose() * j;
  if (condition_number(normal) > opt.max_condition) {
    a.singular = true;
  } else {
    // Sandwich form so the correlated hyperbolic noise is propagated correctly.
    const Eigen::Matrix2d g = normal.inverse();
    const Eigen::MatrixXd r = measurement_noise(mode, 1.0, j.rows());
    a.fix.unit_covariance = g * j.transpose() * r * j * g;
  }
  a.fix.position = p;
  a.fix.residual_rms = std::sqrt(fix_cost(values, beacons, z_mr, mode, p) /
                                 static_cast<double>(std::max<Eigen::Index>(dim, 1)));
  return a;
}

}  // namespace

StaticFix gauss_newton_fix(std::span<const double> values, std::span<const Beacon> beacons,
                           double z_mr, PositioningMode mode, Point2 initial_guess,
                           const GaussNewtonOptions& options) {
  if (beacons.size() < min_beacons(mode)) {
    throw PositioningError("insufficient beacons: " + std::to_string(beacons.size()) + " for " +
                           std::string(to_string(mode)) + " positioning");
  }
  const std::size_t expected =
      mode == PositioningMode::Spherical ? beacons.size() : beacons.size() - 1;
  if (values.size() != expected) {
    throw PositioningError("observation length " + std::to_string(values.size()) +
                           " does not match beacon count");
  }
  for (const auto& b : beacons) {
    if (!(z_mr < b.z)) throw PositioningError("receiver height must be below every beacon");
  }

  Attempt a = solve(values, beacons, z_mr, mode, initial_guess, options, false);
  if (a.singular) a = solve(values, beacons, z_mr, mode, initial_guess, options, true);
  if (a.singular) {
    throw PositioningError("singular normal equations: degenerate beacon geometry");
  }
  if (a.fix.converged && !std::isfinite(a.fix.residual_rms)) a.fix.converged = false;
  return a.fix;
}

Pose bootstrap_state(const StaticFix& fix0, const StaticFix& fix1, const std::string& frame) {
  if (!fix0.converged || !fix1.converged) {
    throw PositioningError("bootstrap requires two converged fixes");
  }
  const double dx = fix1.position.x - fix0.position.x;
  const double dy = fix1.position.y - fix0.position.y;
  if (dx == 0.0 && dy == 0.0) {
    throw PositioningError("coincident fixes: heading undefined");
  }
  return Pose(fix1.position.x, fix1.position.y, std::atan2(dy, dx), frame);
}

Eigen::Matrix3d bootstrap_covariance(const StaticFix& fix0, const StaticFix& fix1,
                                     double sigma_v) {
  const Eigen::Vector2d d(fix1.position.x - fix0.position.x, fix1.position.y - fix0.position.y);
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) throw PositioningError("coincident fixes: heading undefined");
  // theta = atan2(d); its gradient w.r.t. p1 is n / |d| with n the left normal.
  const Eigen::RowVector2d dtheta = Eigen::RowVector2d(-d.y(), d.x()) / len2;
  const double v = sigma_v * sigma_v;
  const Eigen::Matrix2d c0 = v * fix0.unit_covariance;
  const Eigen::Matrix2d c1 = v * fix1.unit_covariance;

  Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
  p.topLeftCorner<2, 2>() = c1;
  const Eigen::Vector2d cross = c1 * dtheta.transpose();
  p.block<2, 1>(0, 2) = cross;
  p.block<1, 2>(2, 0) = cross.transpose();
  p(2, 2) = (dtheta * (c0 + c1) * dtheta.transpose())(0, 0);
  constexpr double kMaxHeadingVar = 0.25 * kPi * kPi;
  if (p(2, 2) > kMaxHeadingVar) {
    // Past a quarter turn the linearised heading carries no information; use a
    // broad, uncorrelated prior that every filter can still represent.
    p(2, 2) = kMaxHeadingVar;
    p.block<2, 1>(0, 2).setZero();
    p.block<1, 2>(2, 0).setZero();
  }
  return p;
}

}  // namespace scan
