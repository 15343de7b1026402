#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scan/filters.hpp"
#include "scan/scenario.hpp"

namespace scan::testing {

/// Brute-force least-squares position: a coarse 0.02 m grid over the coverage
/// disc, refined twice (+-0.04 m at 1 mm, then +-2 mm at 25 um, each window
/// re-centred until its best point is interior). The residual
/// is evaluated here from first principles, independently of the library.
Point2 grid_refinement_fix(std::span<const double> values, std::span<const Beacon> beacons,
                           double z_mr, PositioningMode mode, Point2 center, double radius);

/// Sum of squared residuals, written out directly from the range geometry.
double oracle_cost(std::span<const double> values, std::span<const Beacon> beacons, double z_mr,
                   PositioningMode mode, Point2 p);

/// Scalar linear-Gaussian system x' = a x + w, z = h x + v.
struct ScalarSystem {
  double a = 1.0;
  double h = 1.0;
  double q = 0.1;
  double r = 0.2;
  double x0 = 0.0;
  double p0 = 1.0;
};

/// Closed-form scalar Kalman recursion; returns the posterior mean per step.
std::vector<double> scalar_kalman(const ScalarSystem& s, std::span<const double> z);

/// Linear 3-state process / 2-row observation for filter cross-checks.
kf::Process linear_process(const Eigen::Matrix3d& a, const Eigen::Matrix3d& q);
kf::Observation linear_observation(const Eigen::MatrixXd& h, const Eigen::MatrixXd& r,
                                   const Eigen::VectorXd& z);

/// Central finite-difference Jacobian.
Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step = 1e-6);

/// Smallest-to-largest eigenvalues of the symmetric part of `m`.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

}  // namespace scan::testing
