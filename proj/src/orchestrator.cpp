#include "scan/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scan/measurement.hpp"

namespace scan {

namespace {

struct ReferencedObservation {
  const UsObservation* obs = nullptr;
  std::span<const Beacon> beacons;
};

// Explicit tuning overrides the covariance derived from the bootstrap fixes.
Eigen::Matrix3d initial_covariance(const StaticFix& fix0, const StaticFix& fix1,
                                   const ScenarioConfig& config) {
  const FilterTuning& t = config.filter;
  Eigen::Matrix3d p = bootstrap_covariance(fix0, fix1, measurement_sigma(config));
  if (t.init_sigma_xy) {
    p.topLeftCorner<2, 2>() = Eigen::Matrix2d::Identity() * (*t.init_sigma_xy * *t.init_sigma_xy);
  }
  if (t.init_sigma_theta) p(2, 2) = *t.init_sigma_theta * *t.init_sigma_theta;
  if (t.init_sigma_xy || t.init_sigma_theta) {
    p.block<2, 1>(0, 2).setZero();
    p.block<1, 2>(2, 0).setZero();
  }
  return p;
}

// Observations interpretable in the global frame: globally referenced clusters
// and clusters already promoted.
std::vector<ReferencedObservation> global_observations(const ScanState& state,
                                                       const MeasurementFrame& frame,
                                                       const ScenarioConfig& config) {
  std::vector<ReferencedObservation> out;
  for (const auto& obs : frame.observations) {
    const UlpsDescriptor* u = config.find(obs.ulps_id);
    if (u == nullptr) continue;
    if (u->is_global()) {
      out.push_back({&obs, u->beacons});
    } else if (auto it = state.calibrated.find(u->id); it != state.calibrated.end()) {
      out.push_back({&obs, it->second.beacons});
    }
  }
  return out;
}

// Tries one static fix and, once two fixes are far enough apart, returns the
// seeded filter state. `pending` carries the first fix between epochs.
std::optional<FilterState> try_bootstrap(std::optional<StaticFix>& pending, const UsObservation& obs,
                                  std::span<const Beacon> beacons, Point2 guess,
                                  const ScenarioConfig& config, const std::string& frame_id) {
  StaticFix fix;
  try {
    fix = gauss_newton_fix(obs.values, beacons, config.z_mr, config.mode, guess);
  } catch (const PositioningError&) {
    return std::nullopt;
  }
  if (!fix.converged) return std::nullopt;
  if (!pending) {
    pending = fix;
    return std::nullopt;
  }
  if (distance(pending->position, fix.position) < kBootstrapSpacing) return std::nullopt;
  FilterState out{bootstrap_state(*pending, fix, frame_id),
                  initial_covariance(*pending, fix, config)};
  pending.reset();
  return out;
}

void promote(ScanState& state, const std::string& id, LocalTrack& track, int epoch,
             const ScenarioConfig& config, const ScanOptions& options) {
  const UlpsDescriptor* u = config.find(id);
  CalibrationRecord rec;
  rec.ulps_id = id;
  rec.method = options.method;
  rec.epoch = epoch;
  if (options.method == CalibrationMethod::Analytical) {
    if (track.analytical.empty()) return;
    rec.transform = mean_transform(track.analytical);
    rec.samples = static_cast<int>(track.analytical.size());
  } else {
    if (select_points(track.log, config.d_min, config.max_points).size() < 2) return;
    const TransformVector init =
        track.analytical.empty() ? TransformVector{} : mean_transform(track.analytical);
    const NumericalFit fit = numerical_tc(track.log, config.d_min, config.max_points, init);
    rec.transform = fit.transform;
    rec.samples = fit.points;
    if (!fit.improved && fit.initial_mean_error > 0.0) {
      state.warnings.push_back(id + ": numerical fit did not improve on its initialiser");
    }
  }
  rec.beacons = calibrate_beacons(*u, rec.transform);
  state.calibrated.emplace(id, std::move(rec));
  state.local.erase(id);
}

}  // namespace

void step(ScanState& state, const MeasurementFrame& frame, const ScenarioConfig& config,
          const ScanOptions& options) {
  const StepContext ctx = make_step_context(config);
  state.last_epoch = frame.epoch;

  // Global frame.
  const auto referenced = global_observations(state, frame, config);
  if (state.global_filter) {
    const Pose predicted = process_model(state.global_filter->x_hat, frame.odo);
    const ReferencedObservation* chosen = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : referenced) {
      const double d = distance(beacon_centroid(r.beacons), predicted.position());
      if (d < best) {
        best = d;
        chosen = &r;
      }
    }
    std::optional<ObservationInput> input;
    if (chosen != nullptr) input = ObservationInput{chosen->obs->values, chosen->beacons};
    state.global_filter =
        filter_step(options.filter, *state.global_filter, frame.odo, input, ctx, config.filter);
  } else {
    const UlpsDescriptor* gr = nullptr;
    const UsObservation* gr_obs = nullptr;
    for (const auto& obs : frame.observations) {
      const UlpsDescriptor* u = config.find(obs.ulps_id);
      if (u != nullptr && u->is_global()) {
        gr = u;
        gr_obs = &obs;
        break;
      }
    }
    if (gr == nullptr) {
      state.global_pending_fix.reset();
    } else if (auto seeded = try_bootstrap(state.global_pending_fix, *gr_obs, gr->beacons,
                                           gr->coverage_center, config, kGlobalFrame)) {
      state.global_filter = std::move(seeded);
    }
  }
  if (state.global_filter) {
    state.trajectory_global.push_back({frame.epoch, state.global_filter->x_hat, frame.true_pose});
  }
  const bool global_valid = state.global_filter.has_value() && !referenced.empty();

  // Local frames of clusters not yet calibrated.
  for (const auto& u : config.ulps_list) {
    if (u.is_global() || state.calibrated.contains(u.id)) continue;
    const UsObservation* obs = frame.find(u.id);
    auto it = state.local.find(u.id);
    if (obs == nullptr && it == state.local.end()) continue;
    LocalTrack& track = (it == state.local.end()) ? state.local[u.id] : it->second;

    if (track.filter) {
      std::optional<ObservationInput> input;
      if (obs != nullptr) input = ObservationInput{obs->values, u.beacons};
      track.filter = filter_step(options.filter, *track.filter, frame.odo, input, ctx, config.filter);
    } else if (obs == nullptr) {
      track.pending_fix.reset();
    } else if (auto seeded = try_bootstrap(track.pending_fix, *obs, u.beacons,
                                           beacon_centroid(u.beacons), config, u.id)) {
      track.filter = std::move(seeded);
    }
    if (track.filter) {
      state.trajectories_local[u.id].push_back({frame.epoch, track.filter->x_hat, frame.true_pose});
    }

    const bool common = global_valid && obs != nullptr && track.filter.has_value();
    if (common) {
      track.log.pairs.push_back(
          {track.filter->x_hat.position(), state.global_filter->x_hat.position(), frame.epoch});
      const std::size_t newest = track.log.pairs.size() - 1;
      if (const auto partner = latest_partner(track.log, newest, config.d_min)) {
        track.analytical.push_back(analytical_tc(track.log.pairs[newest], track.log.pairs[*partner]));
      }
    }
    const bool leaving = track.in_common && !common;
    track.in_common = common;
    if (leaving) promote(state, u.id, track, frame.epoch, config, options);
  }
}

void finish(ScanState& state, const ScenarioConfig& config, const ScanOptions& options) {
  std::vector<std::string> ids;
  for (const auto& [id, track] : state.local) ids.push_back(id);
  for (const auto& id : ids) {
    promote(state, id, state.local.at(id), state.last_epoch, config, options);
  }
}

namespace {

double rmse(const std::vector<TrajectorySample>& traj) {
  if (traj.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : traj) {
    const double d = distance(s.estimate.position(), s.truth.position());
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(traj.size()));
}

// Ground-truth local-to-global transform of a locally referenced cluster,
// recovered from its first two beacons.
std::optional<TransformVector> truth_transform(const UlpsDescriptor& u) {
  if (u.is_global() || u.beacons.size() < 2) return std::nullopt;
  return analytical_tc({u.beacons[0].floor(), u.truth_beacons[0].floor(), 0},
                       {u.beacons[1].floor(), u.truth_beacons[1].floor(), 0});
}

Pose to_local(const Pose& global, const TransformVector& t, const std::string& frame) {
  const double s2 = t.t1 * t.t1 + t.t2 * t.t2;
  const double dx = global.x - t.t3;
  const double dy = global.y - t.t4;
  return Pose((t.t1 * dx + t.t2 * dy) / s2, (t.t1 * dy - t.t2 * dx) / s2,
              global.theta() - t.rotation(), frame);
}

ScanResult collect(ScanState&& state, const ScenarioConfig& config) {
  ScanResult r;
  r.trajectory_global = std::move(state.trajectory_global);
  r.trajectories_local = std::move(state.trajectories_local);
  r.calibrations = std::move(state.calibrated);
  r.warnings = std::move(state.warnings);
  for (const auto& u : config.ulps_list) {
    if (!u.is_global() && !r.calibrations.contains(u.id)) {
      r.uncalibrated.push_back(u.id);
      r.warnings.push_back(u.id + ": left uncalibrated (no correspondence pair reached d_min)");
    }
  }
  r.global_rmse = rmse(r.trajectory_global);
  return r;
}

void attach_truth(ScanResult& r, const ScenarioConfig& config) {
  for (auto& [id, rec] : r.calibrations) {
    const UlpsDescriptor* u = config.find(id);
    if (u == nullptr || u->truth_beacons.size() != rec.beacons.size()) continue;
    rec.beacon_errors = beacon_errors(rec.beacons, u->truth_beacons);
    rec.mean_error = beacon_error(rec.beacons, u->truth_beacons);
    if (rec.replaced) {
      auto prev = std::make_shared<CalibrationRecord>(*rec.replaced);
      prev->beacon_errors = beacon_errors(prev->beacons, u->truth_beacons);
      prev->mean_error = beacon_error(prev->beacons, u->truth_beacons);
      rec.replaced = std::move(prev);
    }
  }
  for (auto& [id, traj] : r.trajectories_local) {
    const UlpsDescriptor* u = config.find(id);
    if (u == nullptr) continue;
    const auto t = truth_transform(*u);
    if (!t) continue;
    for (auto& s : traj) s.truth = to_local(s.truth, *t, id);
  }
}

}  // namespace

ScanResult run_forward(std::span<const MeasurementFrame> frames, const ScenarioConfig& config,
                       const ScanOptions& options) {
  ScanState state;
  for (const auto& f : frames) step(state, f, config, options);
  finish(state, config, options);
  return collect(std::move(state), config);
}

ScanResult inverse_trajectory_pass(std::span<const MeasurementFrame> frames,
                                   const ScanResult& forward, const ScenarioConfig& config,
                                   const ScanOptions& options) {
  ScanResult out = forward;
  if (config.inverse_correct_count <= 0 || frames.empty()) return out;

  bool ends_in_gr = false;
  for (const auto& obs : frames.back().observations) {
    const UlpsDescriptor* u = config.find(obs.ulps_id);
    if (u != nullptr && u->is_global()) ends_in_gr = true;
  }
  if (!ends_in_gr) {
    out.warnings.push_back("inverse pass skipped: log does not end inside a globally referenced cluster");
    return out;
  }

  const auto reversed = reverse_frames(frames);
  const ScanResult backward = run_forward(reversed, config, options);

  std::vector<const CalibrationRecord*> order;
  for (const auto& [id, rec] : forward.calibrations) order.push_back(&rec);
  std::stable_sort(order.begin(), order.end(),
                   [](const CalibrationRecord* a, const CalibrationRecord* b) {
                     return a->epoch < b->epoch;
                   });
  const auto count = std::min<std::size_t>(order.size(),
                                           static_cast<std::size_t>(config.inverse_correct_count));
  for (std::size_t i = order.size() - count; i < order.size(); ++i) {
    const std::string& id = order[i]->ulps_id;
    auto it = backward.calibrations.find(id);
    if (it == backward.calibrations.end()) {
      out.warnings.push_back(id + ": inverse pass produced no calibration; forward result kept");
      continue;
    }
    CalibrationRecord rec = it->second;
    rec.pass = CalibrationPass::Inverse;
    rec.replaced = std::make_shared<const CalibrationRecord>(*order[i]);
    out.calibrations[id] = std::move(rec);
  }
  return out;
}

ScanResult run(std::span<const MeasurementFrame> frames, const ScenarioConfig& config,
               const ScanOptions& options) {
  ScanResult r = run_forward(frames, config, options);
  if (options.inverse) r = inverse_trajectory_pass(frames, r, config, options);
  attach_truth(r, config);
  return r;
}

}  // namespace scan
