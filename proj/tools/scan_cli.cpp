// Command-line front end for single runs, Monte Carlo batches and d_min sweeps.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scan/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPipeline = 2;
constexpr const char* kOutDirEnv = "SCAN_OUT_DIR";

struct CommonArgs {
  std::string scenario;
  std::string filter = "ekf";
  std::optional<std::string> mode;
  std::string method = "analytical";
  bool inverse = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("scenario", a.scenario, "Scenario JSON file")->required();
  cmd->add_option("--filter", a.filter, "Estimator: ekf, ukf or hinf")
      ->check(CLI::IsMember({"ekf", "ukf", "hinf"}));
  cmd->add_option("--mode", a.mode, "Positioning mode (defaults to the scenario's)")
      ->check(CLI::IsMember({"spherical", "hyperbolic"}));
  cmd->add_option("--method", a.method, "Calibration method: analytical or numerical")
      ->check(CLI::IsMember({"analytical", "numerical"}));
  cmd->add_flag("--inverse", a.inverse, "Run the inverse-trajectory pass");
  cmd->add_option("--seed", a.seed, "Seed (base seed for batches); defaults to the scenario's");
  cmd->add_option("--out-dir", a.out_dir,
                  std::string("Output directory (default: $") + kOutDirEnv + " or ./scan_out)");
}

fs::path resolve_out_dir(const CommonArgs& a) {
  if (a.out_dir) return *a.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "scan_out";
}

scan::ScenarioConfig load(const CommonArgs& a) {
  auto config = scan::load_scenario(a.scenario);
  if (a.mode) config.mode = scan::parse_mode(*a.mode);
  if (a.seed) config.seed = *a.seed;
  return config;
}

scan::ScanOptions options_of(const CommonArgs& a) {
  return {scan::parse_filter(a.filter), scan::parse_method(a.method), a.inverse};
}

void write_batch(const fs::path& dir, const scan::BatchResult& batch,
                 const scan::ScenarioConfig& config, const scan::ScanOptions& options) {
  fs::create_directories(dir);
  scan::write_text_file(dir / "aggregate.json", scan::batch_json(batch, config, options).dump(2));
  scan::write_text_file(dir / "per_cluster.csv", scan::per_cluster_csv(batch));
  scan::write_text_file(dir / "runs.csv", scan::runs_csv(batch, config));
  scan::write_text_file(dir / "cdf.csv", scan::cdf_csv(batch.cdf));
}

void report_batch(const scan::BatchResult& batch) {
  for (const auto& [id, st] : batch.clusters) {
    std::cout << "  " << id << ": mean " << scan::format_number(st.mean) << " m, std "
              << scan::format_number(st.stddev) << " m";
    if (st.uncalibrated_runs > 0) std::cout << " (" << st.uncalibrated_runs << " uncalibrated)";
    std::cout << '\n';
  }
  if (!batch.failures.empty()) {
    std::cout << "  failed runs: " << batch.failures.size() << '\n';
  }
}

int cmd_run(const CommonArgs& a, bool timing) {
  const auto config = load(a);
  const auto options = options_of(a);
  const auto outcome = scan::run_once(config, options);

  const fs::path dir = resolve_out_dir(a);
  fs::create_directories(dir);
  scan::write_text_file(dir / "trajectory.csv", scan::trajectory_csv(outcome.result));
  scan::write_text_file(dir / "calibration.json", scan::calibration_json(outcome.result).dump(2));
  auto summary = scan::summary_json(outcome.summary);
  if (timing) summary["runtime"] = outcome.summary.runtime;
  scan::write_text_file(dir / "summary.json", summary.dump(2));

  for (const auto& w : outcome.result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "global RMSE " << scan::format_number(outcome.summary.global_rmse) << " m, "
            << outcome.result.calibrations.size() << " cluster(s) calibrated, runtime "
            << scan::format_number(outcome.summary.runtime) << " s\n";
  std::cout << "wrote " << dir.string() << '\n';
  return kExitOk;
}

int cmd_montecarlo(const CommonArgs& a, int runs) {
  const auto config = load(a);
  const auto options = options_of(a);
  const auto batch = scan::monte_carlo(config, options, runs, config.seed, a.threads);
  const fs::path dir = resolve_out_dir(a);
  write_batch(dir, batch, config, options);
  report_batch(batch);
  std::cout << "wrote " << dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::vector<double>& values, int runs) {
  const auto config = load(a);
  const auto options = options_of(a);
  const auto sweep = scan::sweep_dmin(config, options, values, runs, config.seed, a.threads);
  const fs::path dir = resolve_out_dir(a);
  fs::create_directories(dir);
  for (const auto& e : sweep) {
    auto c = config;
    c.d_min = e.d_min;
    write_batch(dir / ("dmin_" + scan::format_number(e.d_min)), e.batch, c, options);
  }
  scan::write_text_file(dir / "sweep_cdf.csv", scan::sweep_cdf_csv(sweep));
  scan::write_text_file(dir / "sweep_summary.csv", scan::sweep_summary_csv(sweep));
  for (const auto& e : sweep) {
    std::cout << "d_min " << scan::format_number(e.d_min) << ": p95 "
              << (e.batch.cdf.errors.empty() ? std::string("n/a")
                                             : scan::format_number(e.batch.cdf.quantile(0.95)))
              << " m over " << e.batch.runs.size() << " run(s)\n";
  }
  std::cout << "wrote " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous calibration and navigation of ultrasonic beacon clusters"};
  app.require_subcommand(1);

  CommonArgs run_args;
  bool timing = false;
  auto* run = app.add_subcommand("run", "Run one simulation and write its outputs");
  add_common(run, run_args);
  run->add_flag("--timing", timing, "Include the wall-clock runtime in summary.json");

  CommonArgs mc_args;
  int mc_runs = 100;
  auto* mc = app.add_subcommand("montecarlo", "Run a seeded Monte Carlo batch");
  add_common(mc, mc_args);
  mc->add_option("--runs", mc_runs, "Number of runs")->check(CLI::PositiveNumber);
  mc->add_option("--threads", mc_args.threads, "Worker threads (0 = hardware count)");

  CommonArgs sw_args;
  int sw_runs = 100;
  std::vector<double> values{0.5, 1.5, 2.5, 5.0};
  auto* sw = app.add_subcommand("sweep-dmin", "Run one Monte Carlo batch per d_min value");
  add_common(sw, sw_args);
  sw->add_option("--values", values, "d_min values in metres")->delimiter(',');
  sw->add_option("--runs", sw_runs, "Runs per value")->check(CLI::PositiveNumber);
  sw->add_option("--threads", sw_args.threads, "Worker threads (0 = hardware count)");

  std::string default_path;
  auto* def = app.add_subcommand("default-scenario", "Write the built-in default scenario");
  def->add_option("path", default_path, "Destination JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (double v : values) {
    if (sw->parsed() && !(v > 0.0)) {
      std::cerr << "error: --values must all be positive\n";
      return kExitUsage;
    }
  }

  try {
    if (run->parsed()) return cmd_run(run_args, timing);
    if (mc->parsed()) return cmd_montecarlo(mc_args, mc_runs);
    if (sw->parsed()) return cmd_sweep(sw_args, values, sw_runs);
    if (def->parsed()) {
      scan::save_scenario(scan::default_scenario(), default_path);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitUsage;
}
