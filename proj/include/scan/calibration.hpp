#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "scan/geometry.hpp"
#include "scan/scenario.hpp"
#include "scan/simulator.hpp"

namespace scan {

class CalibrationError : public Error {
 public:
  using Error::Error;
};

enum class CalibrationMethod { Analytical, Numerical };

std::string_view to_string(CalibrationMethod method);
CalibrationMethod parse_method(std::string_view text);

/// Four-parameter local-to-global similarity: (t1, t2) encode rotation and
/// scale as s*cos(phi), s*sin(phi); (t3, t4) the translation in metres.
struct TransformVector {
  double t1 = 1.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;

  double scale() const;
  double rotation() const;

  friend bool operator==(const TransformVector&, const TransformVector&) = default;
};

/// The single local-to-global mapping used for trajectory points and beacons.
Point2 transform_point(Point2 p, const TransformVector& t);

/// A local-frame pose estimate and the simultaneous global estimate.
struct Correspondence {
  Point2 local;
  Point2 global;
  int epoch = 0;
};

struct CorrespondenceLog {
  std::vector<Correspondence> pairs;
};

/// Exact transform through two correspondences. Throws CalibrationError when
/// the local points coincide.
TransformVector analytical_tc(const Correspondence& a, const Correspondence& b);

TransformVector mean_transform(std::span<const TransformVector> ts);

/// Index of the most recent entry before `newest` whose local point lies at
/// least `d_min` from the newest local point.
std::optional<std::size_t> latest_partner(const CorrespondenceLog& log, std::size_t newest,
                                          double d_min);

/// Per-epoch two-point solutions, in the order they become available.
std::vector<TransformVector> analytical_sequence(const CorrespondenceLog& log, double d_min);

/// Component-wise mean of analytical_sequence. Throws CalibrationError when no
/// pair reaches the d_min baseline.
TransformVector accumulate_analytical(const CorrespondenceLog& log, double d_min);

/// Greedy epoch-order subset whose local points are pairwise >= d_min apart.
std::vector<Correspondence> select_points(const CorrespondenceLog& log, double d_min,
                                          int max_points);

/// Mean Euclidean distance between transformed local points and their global
/// partners.
double mean_error(std::span<const Correspondence> points, const TransformVector& t);

struct NumericalFit {
  TransformVector transform;
  double mean_error = 0.0;
  double initial_mean_error = 0.0;
  int points = 0;
  bool improved = false;  // false: optimiser could not beat `init`, which is returned
};

NumericalFit numerical_tc(const CorrespondenceLog& log, double d_min, int max_points,
                          const TransformVector& init);

/// Maps the cluster's local beacons into the global frame; heights unchanged.
std::vector<Beacon> calibrate_beacons(const UlpsDescriptor& u, const TransformVector& t);

/// Mean 2D distance between index-aligned beacon lists.
double beacon_error(std::span<const Beacon> estimated, std::span<const Beacon> truth);

/// Per-beacon 2D distances between index-aligned beacon lists.
std::vector<double> beacon_errors(std::span<const Beacon> estimated, std::span<const Beacon> truth);

/// Measurement log replayed backwards from its final epoch. Observations are
/// reused verbatim; odometry is re-indexed from the recorded increments so that
/// no new noise enters.
std::vector<MeasurementFrame> reverse_frames(std::span<const MeasurementFrame> frames);

}  // namespace scan
