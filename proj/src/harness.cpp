#include "scan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace scan {

double CdfTable::quantile(double p) const {
  if (errors.empty()) throw Error("quantile of an empty CDF");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] >= p - 1e-12) return errors[i];
  }
  return errors.back();
}

double CdfTable::fraction_at_most(double e) const {
  const auto it = std::upper_bound(errors.begin(), errors.end(), e);
  if (it == errors.begin()) return 0.0;
  return fractions[static_cast<std::size_t>(it - errors.begin()) - 1];
}

CdfTable compute_cdf(std::span<const double> samples) {
  if (samples.empty()) throw Error("CDF of an empty sample set");
  CdfTable t;
  t.errors.assign(samples.begin(), samples.end());
  std::sort(t.errors.begin(), t.errors.end());
  const double n = static_cast<double>(t.errors.size());
  t.fractions.reserve(t.errors.size());
  for (std::size_t i = 0; i < t.errors.size(); ++i) {
    t.fractions.push_back(static_cast<double>(i + 1) / n);
  }
  t.fractions.back() = 1.0;
  return t;
}

RunSummary summarize(const ScanResult& result, const ScenarioConfig& config,
                     const ScanOptions& options) {
  RunSummary s;
  s.seed = config.seed;
  s.filter = options.filter;
  s.mode = config.mode;
  s.method = options.method;
  s.inverse = options.inverse;
  s.global_rmse = result.global_rmse;
  for (const auto& u : config.ulps_list) {
    if (u.is_global()) continue;
    auto it = result.calibrations.find(u.id);
    if (it == result.calibrations.end()) {
      s.per_cluster_mean_error[u.id] = std::nullopt;
      continue;
    }
    const auto& rec = it->second;
    s.per_cluster_mean_error[u.id] = rec.mean_error;
    s.beacon_errors.insert(s.beacon_errors.end(), rec.beacon_errors.begin(),
                           rec.beacon_errors.end());
    if (rec.replaced) s.forward_error_replaced[u.id] = rec.replaced->mean_error;
  }
  return s;
}

RunOutcome run_once(const ScenarioConfig& config, const ScanOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.frames = simulate(config);
  out.result = run(out.frames, config, options);
  out.summary = summarize(out.result, config, options);
  out.summary.runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::optional<std::string> BatchResult::worst_cluster() const {
  std::optional<std::string> worst;
  double value = -1.0;
  for (const auto& [id, st] : clusters) {
    if (st.calibrated_runs > 0 && st.mean > value) {
      value = st.mean;
      worst = id;
    }
  }
  return worst;
}

BatchResult aggregate(std::vector<RunSummary> runs,
                      std::vector<std::pair<std::uint64_t, std::string>> failures,
                      const ScenarioConfig& config) {
  BatchResult b;
  b.runs = std::move(runs);
  b.failures = std::move(failures);
  std::vector<double> all;
  double rmse_sum = 0.0;
  for (const auto& u : config.ulps_list) {
    if (u.is_global()) continue;
    std::vector<double> vals;
    ClusterStats st;
    for (const auto& r : b.runs) {
      const auto it = r.per_cluster_mean_error.find(u.id);
      if (it != r.per_cluster_mean_error.end() && it->second) {
        vals.push_back(*it->second);
      } else {
        ++st.uncalibrated_runs;
      }
    }
    st.calibrated_runs = static_cast<int>(vals.size());
    if (!vals.empty()) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      st.mean = sum / static_cast<double>(vals.size());
      double sq = 0.0;
      for (double v : vals) sq += (v - st.mean) * (v - st.mean);
      st.stddev = vals.size() > 1 ? std::sqrt(sq / static_cast<double>(vals.size() - 1)) : 0.0;
    }
    b.clusters[u.id] = st;
  }
  for (const auto& r : b.runs) {
    all.insert(all.end(), r.beacon_errors.begin(), r.beacon_errors.end());
    rmse_sum += r.global_rmse;
  }
  if (!all.empty()) b.cdf = compute_cdf(all);
  if (!b.runs.empty()) b.mean_global_rmse = rmse_sum / static_cast<double>(b.runs.size());
  return b;
}

BatchResult monte_carlo(const ScenarioConfig& config, const ScanOptions& options, int runs,
                        std::uint64_t base_seed, unsigned threads) {
  if (runs < 1) throw Error("Monte Carlo batch needs at least one run");
  struct Slot {
    std::optional<RunSummary> summary;
    std::string error;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int i = next++; i < runs; i = next++) {
      ScenarioConfig c = config;
      c.seed = base_seed + static_cast<std::uint64_t>(i);
      auto& slot = slots[static_cast<std::size_t>(i)];
      try {
        slot.summary = run_once(c, options).summary;
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };

  unsigned n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n = std::min<unsigned>(n, static_cast<unsigned>(runs));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }

  std::vector<RunSummary> ok;
  std::vector<std::pair<std::uint64_t, std::string>> failed;
  for (int i = 0; i < runs; ++i) {
    auto& slot = slots[static_cast<std::size_t>(i)];
    if (slot.summary) {
      ok.push_back(std::move(*slot.summary));
    } else {
      failed.emplace_back(base_seed + static_cast<std::uint64_t>(i), slot.error);
    }
  }
  return aggregate(std::move(ok), std::move(failed), config);
}

std::vector<SweepEntry> sweep_dmin(const ScenarioConfig& config, const ScanOptions& options,
                                   std::span<const double> values, int runs,
                                   std::uint64_t base_seed, unsigned threads) {
  if (values.empty()) throw Error("d_min sweep needs at least one value");
  for (double v : values) {
    if (!(v > 0.0)) throw Error("d_min sweep values must be positive");
  }
  std::vector<SweepEntry> out;
  for (double v : values) {
    ScenarioConfig c = config;
    c.d_min = v;
    out.push_back({v, monte_carlo(c, options, runs, base_seed, threads)});
  }
  return out;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::json beacons_json(const std::vector<Beacon>& bs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : bs) out.push_back({b.x, b.y, b.z});
  return out;
}

nlohmann::json transform_json(const TransformVector& t) {
  return {t.t1, t.t2, t.t3, t.t4};
}

nlohmann::json record_json(const CalibrationRecord& rec) {
  nlohmann::json j = {{"cluster", rec.ulps_id},
                      {"method", to_string(rec.method)},
                      {"pass", rec.pass == CalibrationPass::Forward ? "forward" : "inverse"},
                      {"transform", transform_json(rec.transform)},
                      {"scale", rec.transform.scale()},
                      {"epoch", rec.epoch},
                      {"samples", rec.samples},
                      {"beacons", beacons_json(rec.beacons)}};
  if (!rec.beacon_errors.empty()) {
    j["beacon_errors"] = rec.beacon_errors;
    j["mean_error"] = rec.mean_error;
  }
  return j;
}

}  // namespace

std::string trajectory_csv(const ScanResult& result) {
  std::string out = "epoch,frame,x,y,theta,truth_x,truth_y,truth_theta\n";
  auto emit = [&](const std::string& frame, const std::vector<TrajectorySample>& traj) {
    for (const auto& s : traj) {
      out += std::to_string(s.epoch) + ',' + frame + ',' + format_number(s.estimate.x) + ',' +
             format_number(s.estimate.y) + ',' + format_number(s.estimate.theta()) + ',' +
             format_number(s.truth.x) + ',' + format_number(s.truth.y) + ',' +
             format_number(s.truth.theta()) + '\n';
    }
  };
  emit(kGlobalFrame, result.trajectory_global);
  for (const auto& [id, traj] : result.trajectories_local) emit(id, traj);
  return out;
}

nlohmann::json calibration_json(const ScanResult& result) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& [id, rec] : result.calibrations) {
    nlohmann::json j = record_json(rec);
    if (rec.replaced) j["forward"] = record_json(*rec.replaced);
    clusters.push_back(std::move(j));
  }
  return {{"clusters", clusters}, {"uncalibrated", result.uncalibrated},
          {"warnings", result.warnings}};
}

nlohmann::json summary_json(const RunSummary& s) {
  nlohmann::json errors = nlohmann::json::object();
  for (const auto& [id, e] : s.per_cluster_mean_error) {
    errors[id] = e ? nlohmann::json(*e) : nlohmann::json("uncalibrated");
  }
  nlohmann::json j = {{"seed", s.seed},
                      {"filter", to_string(s.filter)},
                      {"mode", to_string(s.mode)},
                      {"method", to_string(s.method)},
                      {"inverse", s.inverse},
                      {"per_cluster_mean_error", errors},
                      {"global_rmse", s.global_rmse}};
  if (!s.forward_error_replaced.empty()) j["forward_error_replaced"] = s.forward_error_replaced;
  return j;
}

nlohmann::json batch_json(const BatchResult& b, const ScenarioConfig& config,
                          const ScanOptions& options) {
  nlohmann::json clusters = nlohmann::json::object();
  for (const auto& [id, st] : b.clusters) {
    clusters[id] = {{"mean_error", st.mean},
                    {"std_error", st.stddev},
                    {"calibrated_runs", st.calibrated_runs},
                    {"uncalibrated_runs", st.uncalibrated_runs}};
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [seed, msg] : b.failures) failures.push_back({{"seed", seed}, {"error", msg}});
  nlohmann::json j = {{"filter", to_string(options.filter)},
                      {"mode", to_string(config.mode)},
                      {"method", to_string(options.method)},
                      {"inverse", options.inverse},
                      {"d_min", config.d_min},
                      {"runs", b.runs.size()},
                      {"failed_runs", b.failures.size()},
                      {"failures", failures},
                      {"clusters", clusters},
                      {"mean_global_rmse", b.mean_global_rmse}};
  if (auto w = b.worst_cluster()) j["worst_cluster"] = *w;
  if (!b.cdf.errors.empty()) {
    j["beacon_error_p50"] = b.cdf.quantile(0.50);
    j["beacon_error_p95"] = b.cdf.quantile(0.95);
  }
  return j;
}

std::string per_cluster_csv(const BatchResult& b) {
  std::string out = "cluster,mean_error,std_error,calibrated_runs,uncalibrated_runs\n";
  for (const auto& [id, st] : b.clusters) {
    out += id + ',' + format_number(st.mean) + ',' + format_number(st.stddev) + ',' +
           std::to_string(st.calibrated_runs) + ',' + std::to_string(st.uncalibrated_runs) + '\n';
  }
  return out;
}

std::string runs_csv(const BatchResult& b, const ScenarioConfig& config) {
  std::string out = "seed";
  std::vector<std::string> ids;
  for (const auto& u : config.ulps_list) {
    if (!u.is_global()) ids.push_back(u.id);
  }
  for (const auto& id : ids) out += ',' + id;
  out += ",global_rmse\n";
  for (const auto& r : b.runs) {
    out += std::to_string(r.seed);
    for (const auto& id : ids) {
      const auto it = r.per_cluster_mean_error.find(id);
      out += ',';
      out += (it != r.per_cluster_mean_error.end() && it->second) ? format_number(*it->second)
                                                                  : std::string("uncalibrated");
    }
    out += ',' + format_number(r.global_rmse) + '\n';
  }
  return out;
}

std::string cdf_csv(const CdfTable& cdf) {
  std::string out = "error,fraction\n";
  for (std::size_t i = 0; i < cdf.errors.size(); ++i) {
    out += format_number(cdf.errors[i]) + ',' + format_number(cdf.fractions[i]) + '\n';
  }
  return out;
}

std::string sweep_cdf_csv(std::span<const SweepEntry> sweep) {
  std::string out = "fraction";
  for (const auto& e : sweep) out += ",dmin_" + format_number(e.d_min);
  out += '\n';
  for (int k = 1; k <= 100; ++k) {
    const double p = k / 100.0;
    out += format_number(p);
    for (const auto& e : sweep) {
      out += ',';
      out += e.batch.cdf.errors.empty() ? std::string("nan") : format_number(e.batch.cdf.quantile(p));
    }
    out += '\n';
  }
  return out;
}

std::string sweep_summary_csv(std::span<const SweepEntry> sweep) {
  std::string out = "d_min,runs,failed_runs,beacons,mean,p50,p90,p95,max\n";
  for (const auto& e : sweep) {
    const auto& cdf = e.batch.cdf;
    double mean = 0.0;
    for (double v : cdf.errors) mean += v;
    if (!cdf.errors.empty()) mean /= static_cast<double>(cdf.errors.size());
    auto q = [&](double p) { return cdf.errors.empty() ? std::string("nan") : format_number(cdf.quantile(p)); };
    out += format_number(e.d_min) + ',' + std::to_string(e.batch.runs.size()) + ',' +
           std::to_string(e.batch.failures.size()) + ',' + std::to_string(cdf.errors.size()) + ',' +
           format_number(mean) + ',' + q(0.5) + ',' + q(0.9) + ',' + q(0.95) + ',' +
           (cdf.errors.empty() ? std::string("nan") : format_number(cdf.errors.back())) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!content.empty() && content.back() != '\n') out << '\n';
    if (!out) throw Error("write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace scan
