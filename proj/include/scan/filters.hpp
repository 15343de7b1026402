#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "scan/geometry.hpp"
#include "scan/scenario.hpp"
#include "scan/simulator.hpp"

namespace scan {

class FilterError : public Error {
 public:
  using Error::Error;
};

enum class FilterKind { Ekf, Ukf, Hinf };

std::string_view to_string(FilterKind kind);
FilterKind parse_filter(std::string_view text);

/// Model-agnostic estimation primitives. The SCAN filters below are thin
/// adapters over these; keeping them generic lets the three filters be
/// cross-checked on linear problems where they must coincide.
namespace kf {

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct Process {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> propagate;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  Eigen::MatrixXd q;
};

struct Observation {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> predict;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  Eigen::MatrixXd r;
  Eigen::VectorXd z;
};

/// Index of the state component that is an angle (wrapped and averaged on the
/// circle), or -1 for none.
struct AngleIndex {
  Eigen::Index index = -1;
};

struct UkfWeights {
  double lambda = 0.0;
  Eigen::VectorXd mean;  // W^(d)
  Eigen::VectorXd cov;   // W^(c)
};

UkfWeights ukf_weights(Eigen::Index states, const UkfParams& params);

/// Columns of the lower Cholesky factor of `scaled_cov`, retried once with a
/// 1e-12 diagonal jitter before giving up.
Eigen::MatrixXd sigma_spread(const Eigen::MatrixXd& scaled_cov);

void symmetrize(Eigen::MatrixXd& p);

Gaussian ekf_predict(const Gaussian& g, const Process& process, AngleIndex angle = {});
Gaussian ekf_update(const Gaussian& g, const Observation& obs, AngleIndex angle = {});

Gaussian ukf_predict(const Gaussian& g, const Process& process, const UkfParams& params,
                     AngleIndex angle = {});
/// Sigma points are redrawn from the predicted mean and covariance so that
/// the process noise reaches the cross-covariance.
Gaussian ukf_update(const Gaussian& g, const Observation& obs, const UkfParams& params,
                    AngleIndex angle = {});

/// Game-theoretic update with attenuation level gamma; reduces to the Kalman
/// update as gamma -> 0. Throws FilterError when the posterior loses positive
/// definiteness.
Gaussian hinf_update(const Gaussian& g, const Observation& obs, double gamma,
                     AngleIndex angle = {});

}  // namespace kf

/// Pose estimate and its covariance in one reference frame.
struct FilterState {
  Pose x_hat;
  Eigen::Matrix3d P = Eigen::Matrix3d::Identity();

  const std::string& frame() const { return x_hat.frame; }
};

/// One cluster's measurements with the beacon coordinates to interpret them
/// against (expressed in the filter's frame).
struct ObservationInput {
  std::span<const double> values;
  std::span<const Beacon> beacons;
};

struct StepContext {
  double z_mr = 0.5;
  PositioningMode mode = PositioningMode::Spherical;
  double sigma_v = 0.005;
  Eigen::Matrix3d q = Eigen::Matrix3d::Identity() * 1e-4;
};

/// Diagonal process noise from per-axis standard deviations.
Eigen::Matrix3d process_noise(double sigma_xy, double sigma_theta);

/// Std of one observation component: the range std (floored at
/// tuning.min_sigma_v) for spherical mode, sqrt(2) times it for range differences.
double measurement_sigma(const ScenarioConfig& config);

/// Builds the step context a run uses: process noise from the tuning, range
/// noise from the simulation noise floored at tuning.min_sigma_v. Unset process
/// noise falls back to the odometry sigmas.
StepContext make_step_context(const ScenarioConfig& config);

FilterState ekf_step(const FilterState& s, const OdometryIncrement& odo,
                     const std::optional<ObservationInput>& obs, const StepContext& ctx);

FilterState ukf_step(const FilterState& s, const OdometryIncrement& odo,
                     const std::optional<ObservationInput>& obs, const StepContext& ctx,
                     const UkfParams& params);

FilterState hinf_step(const FilterState& s, const OdometryIncrement& odo,
                      const std::optional<ObservationInput>& obs, const StepContext& ctx,
                      double gamma);

FilterState filter_step(FilterKind kind, const FilterState& s, const OdometryIncrement& odo,
                        const std::optional<ObservationInput>& obs, const StepContext& ctx,
                        const FilterTuning& tuning);

}  // namespace scan
