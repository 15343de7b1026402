#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace scan {

inline constexpr double kPi = std::numbers::pi;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline constexpr const char* kGlobalFrame = "global";

/// Planar robot pose. The heading is kept in (-pi, pi] at all times.
class Pose {
 public:
  Pose() = default;
  Pose(double x, double y, double theta, std::string frame = kGlobalFrame)
      : x(x), y(y), frame(std::move(frame)), theta_(wrap_angle(theta)) {}

  double x = 0.0;
  double y = 0.0;
  std::string frame = kGlobalFrame;

  double theta() const { return theta_; }
  void set_theta(double theta) { theta_ = wrap_angle(theta); }

  Point2 position() const { return {x, y}; }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  double theta_ = 0.0;
};

}  // namespace scan
