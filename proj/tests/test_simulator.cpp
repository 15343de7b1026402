#include <cmath>

#include <gtest/gtest.h>

#include "scan/measurement.hpp"
#include "scan/simulator.hpp"

using namespace scan;

namespace {

ScenarioConfig line_config(std::vector<Point2> waypoints, double speed) {
  ScenarioConfig c;
  UlpsDescriptor gr;
  gr.id = "GR";
  gr.beacons = make_square_cluster({0, 0}, 1.0, 3.5, true);
  gr.coverage_center = {0, 0};
  gr.coverage_radius = 50.0;
  c.ulps_list.push_back(gr);
  c.waypoints = std::move(waypoints);
  c.speed = speed;
  c.noise = {0.0, 0.0, 0.0};
  return c;
}

ScenarioConfig zero_noise_default() {
  auto c = default_scenario();
  c.noise = {0.0, 0.0, 0.0};
  return c;
}

}  // namespace

TEST(Trajectory, StraightLineAtUnitSpeed) {
  const auto poses = generate_trajectory(line_config({{0, 0}, {10, 0}}, 1.0));
  ASSERT_EQ(poses.size(), 11u);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_NEAR(poses[i].x, static_cast<double>(i), 1e-12);
    EXPECT_NEAR(poses[i].y, 0.0, 1e-12);
    EXPECT_NEAR(poses[i].theta(), 0.0, 1e-12);
  }
}

TEST(Trajectory, NorthboundHeading) {
  const auto poses = generate_trajectory(line_config({{0, 0}, {0, 5}}, 1.0));
  ASSERT_EQ(poses.size(), 6u);
  for (const auto& p : poses) EXPECT_NEAR(p.theta(), kPi / 2, 1e-12);
}

TEST(Trajectory, LShapeFlipsHeadingAtCorner) {
  const auto poses = generate_trajectory(line_config({{0, 0}, {3, 0}, {3, 3}}, 1.0));
  ASSERT_EQ(poses.size(), 7u);
  EXPECT_NEAR(poses[3].x, 3.0, 1e-12);
  EXPECT_NEAR(poses[3].theta(), 0.0, 1e-12);
  EXPECT_NEAR(poses[4].theta(), kPi / 2, 1e-12);
  EXPECT_NEAR(poses[6].y, 3.0, 1e-12);
}

TEST(Trajectory, ZeroSpeedRejected) {
  auto c = line_config({{0, 0}, {1, 0}}, 1.0);
  c.speed = 0.0;
  EXPECT_THROW(generate_trajectory(c), Error);
}

TEST(Odometry, ZeroNoiseExamples) {
  Rng rng(1);
  const NoiseParams none{0, 0, 0};
  auto o = measure_odometry(Pose(0, 0, 0), Pose(1, 0, 0), none, rng);
  EXPECT_DOUBLE_EQ(o.delta_d, 1.0);
  EXPECT_DOUBLE_EQ(o.delta_theta, 0.0);
  o = measure_odometry(Pose(0, 0, 0), Pose(0, 1, kPi / 2), none, rng);
  EXPECT_DOUBLE_EQ(o.delta_d, 1.0);
  EXPECT_NEAR(o.delta_theta, kPi / 2, 1e-15);
}

TEST(Ultrasound, RangeExamples) {
  const std::vector<Beacon> above{{0, 0, 3.5}};
  EXPECT_DOUBLE_EQ(true_ranges({0, 0}, above, 0.0)[0], 3.5);
  const std::vector<Beacon> off{{3, 4, 3.5}};
  EXPECT_NEAR(true_ranges({0, 0}, off, 0.5)[0], std::sqrt(34.0), 1e-12);
  EXPECT_NEAR(true_ranges({0, 0}, off, 0.5)[0], 5.8310, 1e-4);
}

TEST(Ultrasound, HyperbolicSymmetryGivesZero) {
  UlpsDescriptor u;
  u.id = "GR";
  u.beacons = make_square_cluster({0, 0}, 1.0, 3.5, true);
  u.coverage_center = {0, 0};
  Rng rng(3);
  // Centre of the square is equidistant from every corner, beacon 1 included.
  const auto obs =
      measure_ultrasound(Pose(0, 0, 0), u, 0.5, PositioningMode::Hyperbolic, {0, 0, 0}, rng);
  ASSERT_EQ(obs.values.size(), 4u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(obs.values[static_cast<std::size_t>(i)], 0.0, 1e-15);
}

TEST(Ultrasound, OutsideCoverageThrows) {
  UlpsDescriptor u;
  u.id = "GR";
  u.beacons = make_square_cluster({0, 0}, 1.0, 3.5);
  u.coverage_center = {0, 0};
  Rng rng(3);
  EXPECT_THROW(
      measure_ultrasound(Pose(6, 0, 0), u, 0.5, PositioningMode::Spherical, {0, 0, 0.01}, rng),
      SimulationError);
}

TEST(Ultrasound, HyperbolicNoiseIsCorrelatedThroughReference) {
  UlpsDescriptor u;
  u.id = "GR";
  u.beacons = make_square_cluster({0, 0}, 1.0, 3.5);
  u.coverage_center = {0, 0};
  Rng rng(11);
  const double sigma = 0.01;
  const auto truth =
      measure_ultrasound(Pose(1, 0.5, 0), u, 0.5, PositioningMode::Hyperbolic, {0, 0, 0}, rng);
  const int n = 40000;
  double v0 = 0.0;
  double c01 = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto o =
        measure_ultrasound(Pose(1, 0.5, 0), u, 0.5, PositioningMode::Hyperbolic, {0, 0, sigma}, rng);
    const double e0 = o.values[0] - truth.values[0];
    const double e1 = o.values[1] - truth.values[1];
    v0 += e0 * e0;
    c01 += e0 * e1;
  }
  v0 /= n;
  c01 /= n;
  // Differences share the reference range: variance 2 sigma^2, covariance sigma^2.
  EXPECT_NEAR(v0 / (sigma * sigma), 2.0, 0.06);
  EXPECT_NEAR(c01 / (sigma * sigma), 1.0, 0.06);
}

TEST(Simulate, ZeroNoiseObservationsMatchForwardModel) {
  const auto c = zero_noise_default();
  for (auto mode : {PositioningMode::Spherical, PositioningMode::Hyperbolic}) {
    auto cm = c;
    cm.mode = mode;
    const auto frames = simulate(cm);
    for (const auto& f : frames) {
      for (const auto& o : f.observations) {
        const auto* u = cm.find(o.ulps_id);
        ASSERT_NE(u, nullptr);
        const auto z = predict_measurement(f.true_pose.position(), u->global_beacons(), cm.z_mr, mode);
        ASSERT_EQ(static_cast<std::size_t>(z.size()), o.values.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          EXPECT_NEAR(o.values[static_cast<std::size_t>(i)], z(i), 1e-12);
        }
      }
    }
  }
}

TEST(Simulate, ZeroNoiseOdometryReplaysTruth) {
  const auto frames = simulate(zero_noise_default());
  Pose p = frames.front().true_pose;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    p = process_model(p, frames[k].odo);
    const Pose& t = frames[k].true_pose;
    ASSERT_NEAR(p.x, t.x, 1e-12 * static_cast<double>(k) + 1e-12);
    ASSERT_NEAR(p.y, t.y, 1e-12 * static_cast<double>(k) + 1e-12);
    ASSERT_NEAR(wrap_angle(p.theta() - t.theta()), 0.0, 1e-12);
    // Re-anchor so the per-step check does not accumulate round-off.
    p = t;
  }
}

TEST(Simulate, FrameStructure) {
  const auto c = default_scenario();
  const auto frames = simulate(c);
  ASSERT_FALSE(frames.empty());
  EXPECT_EQ(frames.front().odo, OdometryIncrement{});
  for (std::size_t k = 0; k < frames.size(); ++k) {
    EXPECT_EQ(frames[k].epoch, static_cast<int>(k));
    for (const auto& o : frames[k].observations) {
      EXPECT_TRUE(in_coverage(frames[k].true_pose.position(), *c.find(o.ulps_id)));
    }
  }
}

TEST(Simulate, DeterministicInSeed) {
  auto c = default_scenario();
  const auto a = simulate(c);
  const auto b = simulate(c);
  EXPECT_EQ(a, b);
  c.seed += 1;
  EXPECT_NE(simulate(c), a);
}

TEST(Simulate, FrameJsonRoundTrip) {
  const auto frames = simulate(default_scenario());
  for (std::size_t k = 0; k < frames.size(); k += 37) {
    const auto back = frame_from_json(frame_to_json(frames[k]));
    EXPECT_EQ(back.epoch, frames[k].epoch);
    EXPECT_EQ(back.odo, frames[k].odo);
    EXPECT_EQ(back.observations, frames[k].observations);
    EXPECT_NEAR(back.true_pose.theta(), frames[k].true_pose.theta(), 1e-15);
  }
}
