#include "scan/calibration.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "scan/optimize.hpp"

namespace scan {

std::string_view to_string(CalibrationMethod method) {
  return method == CalibrationMethod::Analytical ? "analytical" : "numerical";
}

CalibrationMethod parse_method(std::string_view text) {
  if (text == "analytical") return CalibrationMethod::Analytical;
  if (text == "numerical") return CalibrationMethod::Numerical;
  throw CalibrationError("unknown calibration method '" + std::string(text) + "'");
}

double TransformVector::scale() const { return std::hypot(t1, t2); }
double TransformVector::rotation() const { return std::atan2(t2, t1); }

Point2 transform_point(Point2 p, const TransformVector& t) {
  return {p.x * t.t1 - p.y * t.t2 + t.t3, p.y * t.t1 + p.x * t.t2 + t.t4};
}

TransformVector analytical_tc(const Correspondence& a, const Correspondence& b) {
  if (a.local == b.local) {
    throw CalibrationError("analytical transform needs two distinct local points");
  }
  Eigen::Matrix4d ta;
  ta << a.local.x, -a.local.y, 1.0, 0.0,  //
      a.local.y, a.local.x, 0.0, 1.0,     //
      b.local.x, -b.local.y, 1.0, 0.0,    //
      b.local.y, b.local.x, 0.0, 1.0;
  const Eigen::Vector4d tb(a.global.x, a.global.y, b.global.x, b.global.y);
  Eigen::FullPivLU<Eigen::Matrix4d> lu(ta);
  if (!lu.isInvertible()) throw CalibrationError("singular correspondence matrix");
  const Eigen::Vector4d tc = lu.solve(tb);
  return {tc(0), tc(1), tc(2), tc(3)};
}

TransformVector mean_transform(std::span<const TransformVector> ts) {
  if (ts.empty()) throw CalibrationError("no transforms to average");
  TransformVector m{0.0, 0.0, 0.0, 0.0};
  for (const auto& t : ts) {
    m.t1 += t.t1;
    m.t2 += t.t2;
    m.t3 += t.t3;
    m.t4 += t.t4;
  }
  const double n = static_cast<double>(ts.size());
  return {m.t1 / n, m.t2 / n, m.t3 / n, m.t4 / n};
}

std::optional<std::size_t> latest_partner(const CorrespondenceLog& log, std::size_t newest,
                                          double d_min) {
  const Point2 p = log.pairs.at(newest).local;
  for (std::size_t i = newest; i-- > 0;) {
    if (distance(log.pairs[i].local, p) >= d_min) return i;
  }
  return std::nullopt;
}

std::vector<TransformVector> analytical_sequence(const CorrespondenceLog& log, double d_min) {
  std::vector<TransformVector> out;
  for (std::size_t n = 1; n < log.pairs.size(); ++n) {
    if (const auto m = latest_partner(log, n, d_min)) {
      out.push_back(analytical_tc(log.pairs[n], log.pairs[*m]));
    }
  }
  return out;
}

TransformVector accumulate_analytical(const CorrespondenceLog& log, double d_min) {
  const auto seq = analytical_sequence(log, d_min);
  if (seq.empty()) throw CalibrationError("no correspondence pair reaches d_min");
  return mean_transform(seq);
}

std::vector<Correspondence> select_points(const CorrespondenceLog& log, double d_min,
                                          int max_points) {
  std::vector<Correspondence> picked;
  for (const auto& c : log.pairs) {
    if (static_cast<int>(picked.size()) >= max_points) break;
    bool far = true;
    for (const auto& p : picked) {
      if (distance(p.local, c.local) < d_min) {
        far = false;
        break;
      }
    }
    if (far) picked.push_back(c);
  }
  return picked;
}

double mean_error(std::span<const Correspondence> points, const TransformVector& t) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : points) sum += distance(transform_point(c.local, t), c.global);
  return sum / static_cast<double>(points.size());
}

NumericalFit numerical_tc(const CorrespondenceLog& log, double d_min, int max_points,
                          const TransformVector& init) {
  const auto points = select_points(log, d_min, max_points);
  if (points.size() < 2) {
    throw CalibrationError("numerical transform needs at least two points >= d_min apart");
  }
  auto objective = [&](const Eigen::VectorXd& v) {
    return mean_error(points, TransformVector{v(0), v(1), v(2), v(3)});
  };
  NelderMeadOptions opt;
  opt.tolerance = 1e-9;
  opt.max_evaluations = 500;
  opt.initial_step = Eigen::Vector4d(0.01, 0.01, 0.05, 0.05);
  const auto res = nelder_mead(objective, Eigen::Vector4d(init.t1, init.t2, init.t3, init.t4), opt);

  NumericalFit fit;
  fit.points = static_cast<int>(points.size());
  fit.initial_mean_error = mean_error(points, init);
  if (res.value < fit.initial_mean_error) {
    fit.transform = {res.x(0), res.x(1), res.x(2), res.x(3)};
    fit.mean_error = res.value;
    fit.improved = true;
  } else {
    fit.transform = init;
    fit.mean_error = fit.initial_mean_error;
  }
  return fit;
}

std::vector<Beacon> calibrate_beacons(const UlpsDescriptor& u, const TransformVector& t) {
  if (u.is_global()) {
    throw CalibrationError("cluster " + u.id + " is already globally referenced");
  }
  std::vector<Beacon> out;
  out.reserve(u.beacons.size());
  for (const auto& b : u.beacons) {
    const Point2 g = transform_point(b.floor(), t);
    out.push_back({g.x, g.y, b.z});
  }
  return out;
}

std::vector<double> beacon_errors(std::span<const Beacon> estimated, std::span<const Beacon> truth) {
  if (estimated.size() != truth.size()) {
    throw CalibrationError("beacon lists differ in length");
  }
  std::vector<double> out;
  out.reserve(estimated.size());
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    out.push_back(distance(estimated[i].floor(), truth[i].floor()));
  }
  return out;
}

double beacon_error(std::span<const Beacon> estimated, std::span<const Beacon> truth) {
  const auto errs = beacon_errors(estimated, truth);
  if (errs.empty()) return 0.0;
  double sum = 0.0;
  for (double e : errs) sum += e;
  return sum / static_cast<double>(errs.size());
}

std::vector<MeasurementFrame> reverse_frames(std::span<const MeasurementFrame> frames) {
  const std::size_t n = frames.size();
  std::vector<MeasurementFrame> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const MeasurementFrame& src = frames[n - 1 - j];
    MeasurementFrame f;
    f.epoch = static_cast<int>(j);
    f.observations = src.observations;
    // Heading of reversed pose j is the direction of travel into it, i.e. the
    // forward heading of the pose after `src`, turned around.
    const double fwd_heading = (j == 0) ? frames[n - 1].true_pose.theta()
                                        : frames[n - j].true_pose.theta();
    f.true_pose = Pose(src.true_pose.x, src.true_pose.y, fwd_heading + kPi, src.true_pose.frame);
    if (j >= 1) {
      f.odo.delta_d = frames[n - j].odo.delta_d;
      f.odo.delta_theta = (j == 1) ? 0.0 : -frames[n - j + 1].odo.delta_theta;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace scan
