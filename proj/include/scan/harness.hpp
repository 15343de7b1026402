#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scan/orchestrator.hpp"

namespace scan {

/// Empirical CDF: sorted samples with cumulative fraction (i + 1) / n.
struct CdfTable {
  std::vector<double> errors;
  std::vector<double> fractions;

  /// Smallest sample whose cumulative fraction reaches `p`.
  double quantile(double p) const;
  /// Fraction of samples <= e.
  double fraction_at_most(double e) const;
};

CdfTable compute_cdf(std::span<const double> samples);

struct RunSummary {
  std::uint64_t seed = 0;
  FilterKind filter = FilterKind::Ekf;
  PositioningMode mode = PositioningMode::Spherical;
  CalibrationMethod method = CalibrationMethod::Analytical;
  bool inverse = false;
  /// Every LR cluster id; nullopt when the cluster was left uncalibrated.
  std::map<std::string, std::optional<double>> per_cluster_mean_error;
  /// Forward-pass errors of clusters whose calibration the inverse pass replaced.
  std::map<std::string, double> forward_error_replaced;
  std::vector<double> beacon_errors;  // all calibrated beacons, scenario order
  double global_rmse = 0.0;
  double runtime = 0.0;  // seconds
};

struct RunOutcome {
  std::vector<MeasurementFrame> frames;
  ScanResult result;
  RunSummary summary;
};

/// Simulates `config` (with its seed) and runs the pipeline once.
RunOutcome run_once(const ScenarioConfig& config, const ScanOptions& options);

RunSummary summarize(const ScanResult& result, const ScenarioConfig& config,
                     const ScanOptions& options);

struct ClusterStats {
  double mean = 0.0;
  double stddev = 0.0;
  int calibrated_runs = 0;
  int uncalibrated_runs = 0;
};

struct BatchResult {
  std::vector<RunSummary> runs;  // successful runs, seed order
  std::vector<std::pair<std::uint64_t, std::string>> failures;
  std::map<std::string, ClusterStats> clusters;
  CdfTable cdf;  // over every calibrated beacon of every successful run
  double mean_global_rmse = 0.0;

  /// Cluster with the largest mean error, if any was calibrated.
  std::optional<std::string> worst_cluster() const;
};

/// Runs `runs` simulations with seeds base_seed + i; failed runs are recorded
/// and excluded from the statistics. `threads` = 0 picks the hardware count.
BatchResult monte_carlo(const ScenarioConfig& config, const ScanOptions& options, int runs,
                        std::uint64_t base_seed, unsigned threads = 0);

BatchResult aggregate(std::vector<RunSummary> runs,
                      std::vector<std::pair<std::uint64_t, std::string>> failures,
                      const ScenarioConfig& config);

struct SweepEntry {
  double d_min = 0.0;
  BatchResult batch;
};

std::vector<SweepEntry> sweep_dmin(const ScenarioConfig& config, const ScanOptions& options,
                                   std::span<const double> values, int runs,
                                   std::uint64_t base_seed, unsigned threads = 0);

// Serialisation. CSV files carry a header row, '.' decimals and a trailing
// newline; numbers are written independently of the process locale.

std::string format_number(double v);

std::string trajectory_csv(const ScanResult& result);
nlohmann::json calibration_json(const ScanResult& result);
nlohmann::json summary_json(const RunSummary& summary);
nlohmann::json batch_json(const BatchResult& batch, const ScenarioConfig& config,
                          const ScanOptions& options);
std::string per_cluster_csv(const BatchResult& batch);
std::string runs_csv(const BatchResult& batch, const ScenarioConfig& config);
std::string cdf_csv(const CdfTable& cdf);
/// Error quantiles of every sweep value on a shared fraction grid (0.01 .. 1.00).
std::string sweep_cdf_csv(std::span<const SweepEntry> sweep);
std::string sweep_summary_csv(std::span<const SweepEntry> sweep);

/// Writes `content` to `path` via a temporary file renamed into place.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace scan
