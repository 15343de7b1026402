#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "scan/geometry.hpp"
#include "scan/scenario.hpp"

namespace scan {

class PositioningError : public Error {
 public:
  using Error::Error;
};

/// Filter-free position solution from one epoch of ultrasound measurements.
struct StaticFix {
  Point2 position;
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Position covariance per unit range variance, first-order about the solution.
  /// Multiply by sigma_v^2 for the covariance of this fix.
  Eigen::Matrix2d unit_covariance = Eigen::Matrix2d::Zero();
};

struct GaussNewtonOptions {
  double step_tolerance = 1e-6;  // m
  int max_iterations = 50;
  double max_condition = 1e12;
  double damping = 1e-6;
};

/// Least-squares receiver position over (x, y) with the height fixed at z_mr.
///
/// `values` are ranges (spherical) or range differences against beacon 1
/// (hyperbolic). When the normal matrix is ill-conditioned the solve is retried
/// once with Levenberg damping; if the geometry is still degenerate at the
/// solution a PositioningError is thrown.
StaticFix gauss_newton_fix(std::span<const double> values, std::span<const Beacon> beacons,
                           double z_mr, PositioningMode mode, Point2 initial_guess,
                           const GaussNewtonOptions& options = {});

/// Sum of squared measurement residuals at `p`; the quantity the solver minimises.
double fix_cost(std::span<const double> values, std::span<const Beacon> beacons, double z_mr,
                PositioningMode mode, Point2 p);

/// Centroid of the beacons' floor projections.
Point2 beacon_centroid(std::span<const Beacon> beacons);

/// Pose at `fix1` heading along the displacement from `fix0`.
Pose bootstrap_state(const StaticFix& fix0, const StaticFix& fix1,
                     const std::string& frame = kGlobalFrame);

/// First-order covariance of the bootstrapped pose (x1, y1, heading) given the
/// two fixes' covariances at range std `sigma_v`. The heading variance is
/// clamped to at most (pi/2)^2.
Eigen::Matrix3d bootstrap_covariance(const StaticFix& fix0, const StaticFix& fix1,
                                     double sigma_v);

}  // namespace scan
