#include "scan/filters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scan/measurement.hpp"

namespace scan {

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Ekf:
      return "ekf";
    case FilterKind::Ukf:
      return "ukf";
    case FilterKind::Hinf:
      return "hinf";
  }
  return "?";
}

FilterKind parse_filter(std::string_view text) {
  if (text == "ekf") return FilterKind::Ekf;
  if (text == "ukf") return FilterKind::Ukf;
  if (text == "hinf") return FilterKind::Hinf;
  throw FilterError("unknown filter '" + std::string(text) + "'");
}

namespace kf {

namespace {

void wrap_component(Eigen::VectorXd& v, AngleIndex angle) {
  if (angle.index >= 0) v(angle.index) = wrap_angle(v(angle.index));
}

Eigen::VectorXd state_difference(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 AngleIndex angle) {
  Eigen::VectorXd d = a - b;
  wrap_component(d, angle);
  return d;
}

std::vector<Eigen::VectorXd> sigma_points(const Gaussian& g, double lambda, AngleIndex angle) {
  const Eigen::Index n = g.mean.size();
  const Eigen::MatrixXd spread = sigma_spread((static_cast<double>(n) + lambda) * g.cov);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(2 * n + 1));
  pts.push_back(g.mean);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd p = g.mean + spread.col(j);
    wrap_component(p, angle);
    pts.push_back(std::move(p));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd p = g.mean - spread.col(j);
    wrap_component(p, angle);
    pts.push_back(std::move(p));
  }
  return pts;
}

// Angles are averaged as wrapped offsets from the centre point. With the
// default alpha the centre weight is about -1e6, and a plain weighted sin/cos
// resultant changes sign once the heading variance exceeds 2 rad^2, flipping
// the mean by pi. The offset form agrees with it to second order otherwise.
Eigen::VectorXd weighted_mean(const std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& w,
                              AngleIndex angle) {
  // Offsets from the centre point keep the large opposite-signed weights from
  // amplifying round-off in absolute coordinates.
  const Eigen::VectorXd& ref = pts.front();
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(ref.size());
  for (std::size_t j = 1; j < pts.size(); ++j) {
    Eigen::VectorXd d = pts[j] - ref;
    if (angle.index >= 0) d(angle.index) = wrap_angle(d(angle.index));
    offset += w(static_cast<Eigen::Index>(j)) * d;
  }
  Eigen::VectorXd mean = ref + offset;
  if (angle.index >= 0) mean(angle.index) = wrap_angle(mean(angle.index));
  return mean;
}

Eigen::MatrixXd solve_spd_right(const Eigen::MatrixXd& lhs, const Eigen::MatrixXd& s) {
  // lhs * s^-1 for symmetric positive definite s.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw FilterError("innovation covariance is not invertible");
  }
  Eigen::MatrixXd out = ldlt.solve(lhs.transpose()).transpose();
  if (!out.allFinite()) throw FilterError("innovation covariance is not invertible");
  return out;
}

}  // namespace

void symmetrize(Eigen::MatrixXd& p) { p = 0.5 * (p + p.transpose()).eval(); }

UkfWeights ukf_weights(Eigen::Index states, const UkfParams& params) {
  const double l = static_cast<double>(states);
  UkfWeights w;
  w.lambda = params.alpha * params.alpha * (l + params.kappa) - l;
  const Eigen::Index count = 2 * states + 1;
  w.mean = Eigen::VectorXd::Constant(count, 1.0 / (2.0 * (l + w.lambda)));
  w.cov = w.mean;
  w.mean(0) = w.lambda / (l + w.lambda);
  w.cov(0) = w.mean(0) + 1.0 - params.alpha * params.alpha + params.beta;
  return w;
}

Eigen::MatrixXd sigma_spread(const Eigen::MatrixXd& scaled_cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(scaled_cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const auto n = scaled_cov.rows();
  Eigen::LLT<Eigen::MatrixXd> retry(scaled_cov + 1e-12 * Eigen::MatrixXd::Identity(n, n));
  if (retry.info() == Eigen::Success) return retry.matrixL();
  throw FilterError("covariance square root failed: matrix not positive definite");
}

Gaussian ekf_predict(const Gaussian& g, const Process& process, AngleIndex angle) {
  const Eigen::MatrixXd a = process.jacobian(g.mean);
  Gaussian out;
  out.mean = process.propagate(g.mean);
  wrap_component(out.mean, angle);
  out.cov = a * g.cov * a.transpose() + process.q;
  symmetrize(out.cov);
  return out;
}

Gaussian ekf_update(const Gaussian& g, const Observation& obs, AngleIndex angle) {
  const Eigen::MatrixXd h = obs.jacobian(g.mean);
  const Eigen::VectorXd innovation = obs.z - obs.predict(g.mean);
  const Eigen::MatrixXd s = h * g.cov * h.transpose() + obs.r;
  const Eigen::MatrixXd k = solve_spd_right(g.cov * h.transpose(), s);
  Gaussian out;
  out.mean = g.mean + k * innovation;
  wrap_component(out.mean, angle);
  const auto n = g.mean.size();
  out.cov = (Eigen::MatrixXd::Identity(n, n) - k * h) * g.cov;
  symmetrize(out.cov);
  return out;
}

Gaussian ukf_predict(const Gaussian& g, const Process& process, const UkfParams& params,
                     AngleIndex angle) {
  const UkfWeights w = ukf_weights(g.mean.size(), params);
  auto pts = sigma_points(g, w.lambda, angle);
  for (auto& p : pts) {
    p = process.propagate(p);
    wrap_component(p, angle);
  }
  Gaussian out;
  out.mean = weighted_mean(pts, w.mean, angle);
  out.cov = process.q;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const Eigen::VectorXd d = state_difference(pts[j], out.mean, angle);
    out.cov += w.cov(static_cast<Eigen::Index>(j)) * d * d.transpose();
  }
  symmetrize(out.cov);
  return out;
}

Gaussian ukf_update(const Gaussian& g, const Observation& obs, const UkfParams& params,
                    AngleIndex angle) {
  const UkfWeights w = ukf_weights(g.mean.size(), params);
  const auto pts = sigma_points(g, w.lambda, angle);
  std::vector<Eigen::VectorXd> ys;
  ys.reserve(pts.size());
  for (const auto& p : pts) ys.push_back(obs.predict(p));

  const Eigen::VectorXd z_hat = weighted_mean(ys, w.mean, AngleIndex{});
  Eigen::MatrixXd pzz = obs.r;
  Eigen::MatrixXd pxz = Eigen::MatrixXd::Zero(g.mean.size(), z_hat.size());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double wc = w.cov(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd dz = ys[j] - z_hat;
    const Eigen::VectorXd dx = state_difference(pts[j], g.mean, angle);
    pzz += wc * dz * dz.transpose();
    pxz += wc * dx * dz.transpose();
  }
  symmetrize(pzz);
  const Eigen::MatrixXd k = solve_spd_right(pxz, pzz);
  Gaussian out;
  out.mean = g.mean + k * (obs.z - z_hat);
  wrap_component(out.mean, angle);
  out.cov = g.cov - k * pzz * k.transpose();
  symmetrize(out.cov);
  return out;
}

Gaussian hinf_update(const Gaussian& g, const Observation& obs, double gamma, AngleIndex angle) {
  const auto n = g.mean.size();
  const Eigen::MatrixXd h = obs.jacobian(g.mean);
  Eigen::LDLT<Eigen::MatrixXd> r_ldlt(obs.r);
  if (r_ldlt.info() != Eigen::Success || !r_ldlt.isPositive()) {
    throw FilterError("measurement covariance is not invertible");
  }
  const Eigen::MatrixXd r_inv_h = r_ldlt.solve(h);  // R^-1 H
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd m = i - gamma * g.cov + h.transpose() * r_inv_h * g.cov;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw FilterError("H-infinity update singular: gamma too aggressive");
  Eigen::MatrixXd post = g.cov * lu.inverse();
  symmetrize(post);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post);
  if (eig.eigenvalues().minCoeff() <= 0.0 || !post.allFinite()) {
    throw FilterError("H-infinity posterior not positive definite: gamma too aggressive");
  }
  const Eigen::MatrixXd k = post * r_inv_h.transpose();  // P S H^T R^-1
  Gaussian out;
  out.mean = g.mean + k * (obs.z - obs.predict(g.mean));
  wrap_component(out.mean, angle);
  out.cov = post;
  return out;
}

}  // namespace kf

Eigen::Matrix3d process_noise(double sigma_xy, double sigma_theta) {
  return Eigen::Vector3d(sigma_xy * sigma_xy, sigma_xy * sigma_xy, sigma_theta * sigma_theta)
      .asDiagonal();
}

double measurement_sigma(const ScenarioConfig& config) {
  const double range_sigma = std::max(config.noise.sigma_us, config.filter.min_sigma_v);
  // A difference of two independent ranges has variance 2 sigma^2; its correlation
  // with another difference sharing the reference is 0.5, which is the structure R encodes.
  return config.mode == PositioningMode::Hyperbolic ? std::sqrt(2.0) * range_sigma : range_sigma;
}

StepContext make_step_context(const ScenarioConfig& config) {
  StepContext ctx;
  ctx.z_mr = config.z_mr;
  ctx.mode = config.mode;
  ctx.sigma_v = measurement_sigma(config);
  ctx.q = process_noise(config.filter.sigma_w_xy.value_or(config.noise.sigma_d_odo),
                       config.filter.sigma_w_theta.value_or(config.noise.sigma_theta_odo));
  return ctx;
}

namespace {

constexpr kf::AngleIndex kHeading{2};

Eigen::VectorXd to_vector(const Pose& p) { return Eigen::Vector3d(p.x, p.y, p.theta()); }

Pose to_pose(const Eigen::VectorXd& v, const std::string& frame) {
  return Pose(v(0), v(1), v(2), frame);
}

kf::Gaussian to_gaussian(const FilterState& s) { return {to_vector(s.x_hat), s.P}; }

FilterState to_state(const kf::Gaussian& g, const std::string& frame) {
  FilterState s;
  s.x_hat = to_pose(g.mean, frame);
  s.P = g.cov;
  s.P = 0.5 * (s.P + s.P.transpose()).eval();
  return s;
}

kf::Process pose_process(const OdometryIncrement& odo, const StepContext& ctx) {
  kf::Process p;
  p.propagate = [odo](const Eigen::VectorXd& x) {
    return to_vector(process_model(Pose(x(0), x(1), x(2)), odo));
  };
  p.jacobian = [odo](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    return process_jacobian(Pose(x(0), x(1), x(2)), odo);
  };
  p.q = ctx.q;
  return p;
}

kf::Observation pose_observation(const ObservationInput& in, const StepContext& ctx) {
  const auto dim = measurement_dim(ctx.mode, in.beacons.size());
  if (dim != static_cast<Eigen::Index>(in.values.size())) {
    throw FilterError("observation length does not match beacon count");
  }
  kf::Observation o;
  const auto beacons = in.beacons;
  const double z_mr = ctx.z_mr;
  const auto mode = ctx.mode;
  o.predict = [beacons, z_mr, mode](const Eigen::VectorXd& x) {
    return predict_measurement({x(0), x(1)}, beacons, z_mr, mode);
  };
  o.jacobian = [beacons, z_mr, mode](const Eigen::VectorXd& x) {
    return measurement_jacobian(Pose(x(0), x(1), x(2)), beacons, z_mr, mode);
  };
  o.r = measurement_noise(mode, ctx.sigma_v, dim);
  o.z = Eigen::Map<const Eigen::VectorXd>(in.values.data(), dim);
  return o;
}

}  // namespace

FilterState ekf_step(const FilterState& s, const OdometryIncrement& odo,
                     const std::optional<ObservationInput>& obs, const StepContext& ctx) {
  auto g = kf::ekf_predict(to_gaussian(s), pose_process(odo, ctx), kHeading);
  if (obs) g = kf::ekf_update(g, pose_observation(*obs, ctx), kHeading);
  return to_state(g, s.frame());
}

FilterState ukf_step(const FilterState& s, const OdometryIncrement& odo,
                     const std::optional<ObservationInput>& obs, const StepContext& ctx,
                     const UkfParams& params) {
  // Sigma points sit within ~1e-4 of the mean while the centre weight is ~-1e6,
  // so the step runs in coordinates centred on the estimate to keep round-off
  // from far-off absolute positions out of the weighted sums.
  const Point2 origin = s.x_hat.position();
  FilterState local = s;
  local.x_hat.x = 0.0;
  local.x_hat.y = 0.0;
  auto g = kf::ukf_predict(to_gaussian(local), pose_process(odo, ctx), params, kHeading);
  if (obs) {
    std::vector<Beacon> shifted(obs->beacons.begin(), obs->beacons.end());
    for (auto& b : shifted) {
      b.x -= origin.x;
      b.y -= origin.y;
    }
    g = kf::ukf_update(g, pose_observation({obs->values, shifted}, ctx), params, kHeading);
  }
  g.mean(0) += origin.x;
  g.mean(1) += origin.y;
  return to_state(g, s.frame());
}

FilterState hinf_step(const FilterState& s, const OdometryIncrement& odo,
                      const std::optional<ObservationInput>& obs, const StepContext& ctx,
                      double gamma) {
  if (!(gamma > 0.0)) throw FilterError("H-infinity gamma must be positive");
  auto g = kf::ekf_predict(to_gaussian(s), pose_process(odo, ctx), kHeading);
  if (obs) g = kf::hinf_update(g, pose_observation(*obs, ctx), gamma, kHeading);
  return to_state(g, s.frame());
}

FilterState filter_step(FilterKind kind, const FilterState& s, const OdometryIncrement& odo,
                        const std::optional<ObservationInput>& obs, const StepContext& ctx,
                        const FilterTuning& tuning) {
  switch (kind) {
    case FilterKind::Ekf:
      return ekf_step(s, odo, obs, ctx);
    case FilterKind::Ukf:
      return ukf_step(s, odo, obs, ctx, tuning.ukf);
    case FilterKind::Hinf:
      return hinf_step(s, odo, obs, ctx, tuning.hinf_gamma);
  }
  throw FilterError("unknown filter kind");
}

}  // namespace scan
