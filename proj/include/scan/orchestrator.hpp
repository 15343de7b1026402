#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scan/calibration.hpp"
#include "scan/filters.hpp"
#include "scan/positioning.hpp"
#include "scan/scenario.hpp"
#include "scan/simulator.hpp"

namespace scan {

struct ScanOptions {
  FilterKind filter = FilterKind::Ekf;
  CalibrationMethod method = CalibrationMethod::Analytical;
  bool inverse = false;
};

/// Minimum distance between the two static fixes used to seed a heading.
inline constexpr double kBootstrapSpacing = 0.05;

struct TrajectorySample {
  int epoch = 0;
  Pose estimate;
  Pose truth;
};

enum class CalibrationPass { Forward, Inverse };

struct CalibrationRecord {
  std::string ulps_id;
  CalibrationMethod method = CalibrationMethod::Analytical;
  CalibrationPass pass = CalibrationPass::Forward;
  TransformVector transform;
  std::vector<Beacon> beacons;  // estimated, global frame
  int epoch = 0;                // epoch of promotion within its pass
  int samples = 0;              // averaged transforms (analytical) or fitted points (numerical)
  std::vector<double> beacon_errors;  // filled when ground truth is known
  double mean_error = 0.0;
  /// Forward-pass record this one replaced during the inverse pass.
  std::shared_ptr<const CalibrationRecord> replaced;
};

/// Per-cluster working set while the cluster is still uncalibrated.
struct LocalTrack {
  std::optional<FilterState> filter;
  std::optional<StaticFix> pending_fix;
  CorrespondenceLog log;
  std::vector<TransformVector> analytical;
  bool in_common = false;
};

struct ScanState {
  std::optional<FilterState> global_filter;
  std::optional<StaticFix> global_pending_fix;
  std::map<std::string, LocalTrack> local;
  std::map<std::string, CalibrationRecord> calibrated;
  std::vector<TrajectorySample> trajectory_global;
  std::map<std::string, std::vector<TrajectorySample>> trajectories_local;
  std::vector<std::string> warnings;
  int last_epoch = -1;
};

struct ScanResult {
  std::vector<TrajectorySample> trajectory_global;
  std::map<std::string, std::vector<TrajectorySample>> trajectories_local;
  std::map<std::string, CalibrationRecord> calibrations;
  std::vector<std::string> uncalibrated;  // LR clusters in scenario order
  std::vector<std::string> warnings;
  double global_rmse = 0.0;
};

/// Advances the pipeline by one measurement frame: global bootstrap or filter
/// step, local bootstraps and steps for uncalibrated clusters, correspondence
/// logging inside common coverage, and promotion on leaving it.
void step(ScanState& state, const MeasurementFrame& frame, const ScenarioConfig& config,
          const ScanOptions& options);

/// Promotes every cluster whose log still allows a transform (end of log).
void finish(ScanState& state, const ScenarioConfig& config, const ScanOptions& options);

/// Forward pass only.
ScanResult run_forward(std::span<const MeasurementFrame> frames, const ScenarioConfig& config,
                       const ScanOptions& options);

/// Replays the log backwards and replaces the calibrations of the last
/// `config.inverse_correct_count` clusters promoted in `forward`. Skipped with a
/// warning when the log does not end inside a globally referenced cluster.
ScanResult inverse_trajectory_pass(std::span<const MeasurementFrame> frames,
                                   const ScanResult& forward, const ScenarioConfig& config,
                                   const ScanOptions& options);

/// Forward pass, optional inverse pass, ground-truth errors.
ScanResult run(std::span<const MeasurementFrame> frames, const ScenarioConfig& config,
               const ScanOptions& options);

}  // namespace scan
