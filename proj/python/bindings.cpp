#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scan/harness.hpp"

namespace py = pybind11;

namespace {

scan::ScenarioConfig parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw scan::ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scan::scenario_from_json(j);
}

scan::ScanOptions make_options(const std::string& filter, const std::string& method, bool inverse) {
  return {scan::parse_filter(filter), scan::parse_method(method), inverse};
}

// Rows of (epoch, x, y, theta, truth_x, truth_y, truth_theta).
py::array_t<double> trajectory_array(const std::vector<scan::TrajectorySample>& traj) {
  py::array_t<double> out({static_cast<py::ssize_t>(traj.size()), py::ssize_t{7}});
  auto m = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < static_cast<py::ssize_t>(traj.size()); ++i) {
    const auto& s = traj[static_cast<std::size_t>(i)];
    const double row[7] = {static_cast<double>(s.epoch), s.estimate.x, s.estimate.y,
                           s.estimate.theta(), s.truth.x, s.truth.y, s.truth.theta()};
    for (py::ssize_t k = 0; k < 7; ++k) m(i, k) = row[k];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of scan_sim; use the scan_sim package instead of importing this directly.";

  auto base = py::register_exception<scan::Error>(m, "ScanError", PyExc_RuntimeError);
  py::register_exception<scan::ScenarioError>(m, "ScenarioError", base.ptr());
  py::register_exception<scan::SimulationError>(m, "SimulationError", base.ptr());
  py::register_exception<scan::PositioningError>(m, "PositioningError", base.ptr());
  py::register_exception<scan::FilterError>(m, "FilterError", base.ptr());
  py::register_exception<scan::CalibrationError>(m, "CalibrationError", base.ptr());

  m.def("default_scenario", [] { return scan::scenario_to_json(scan::default_scenario()).dump(); });

  m.def("normalize_scenario", [](const std::string& text) {
    return scan::scenario_to_json(parse_scenario(text)).dump();
  });

  m.def(
      "simulate",
      [](const std::string& text) {
        const auto frames = scan::simulate(parse_scenario(text));
        nlohmann::json j = nlohmann::json::array();
        for (const auto& f : frames) j.push_back(scan::frame_to_json(f));
        return j.dump();
      },
      py::arg("scenario"));

  m.def(
      "run",
      [](const std::string& text, const std::string& filter, const std::string& method,
         bool inverse) {
        const auto config = parse_scenario(text);
        const auto options = make_options(filter, method, inverse);
        scan::RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = scan::run_once(config, options);
        }
        py::dict out;
        out["summary"] = scan::summary_json(outcome.summary).dump();
        out["calibration"] = scan::calibration_json(outcome.result).dump();
        out["trajectory"] = trajectory_array(outcome.result.trajectory_global);
        out["warnings"] = outcome.result.warnings;
        return out;
      },
      py::arg("scenario"), py::arg("filter"), py::arg("method"), py::arg("inverse"));

  m.def(
      "monte_carlo",
      [](const std::string& text, const std::string& filter, const std::string& method,
         bool inverse, int runs, std::uint64_t seed, unsigned threads) {
        const auto config = parse_scenario(text);
        const auto options = make_options(filter, method, inverse);
        py::gil_scoped_release release;
        const auto batch = scan::monte_carlo(config, options, runs, seed, threads);
        return scan::batch_json(batch, config, options).dump();
      },
      py::arg("scenario"), py::arg("filter"), py::arg("method"), py::arg("inverse"),
      py::arg("runs"), py::arg("seed"), py::arg("threads"));

  m.def(
      "sweep_dmin",
      [](const std::string& text, const std::string& filter, const std::string& method,
         bool inverse, const std::vector<double>& values, int runs, std::uint64_t seed,
         unsigned threads) {
        const auto config = parse_scenario(text);
        const auto options = make_options(filter, method, inverse);
        py::gil_scoped_release release;
        const auto sweep = scan::sweep_dmin(config, options, values, runs, seed, threads);
        nlohmann::json j = nlohmann::json::array();
        for (const auto& e : sweep) {
          auto c = config;
          c.d_min = e.d_min;
          j.push_back({{"d_min", e.d_min}, {"batch", scan::batch_json(e.batch, c, options)}});
        }
        return j.dump();
      },
      py::arg("scenario"), py::arg("filter"), py::arg("method"), py::arg("inverse"),
      py::arg("values"), py::arg("runs"), py::arg("seed"), py::arg("threads"));

  m.def(
      "gauss_newton_fix",
      [](const std::vector<double>& values, const std::vector<std::array<double, 3>>& beacons,
         double z_mr, const std::string& mode, std::array<double, 2> init) {
        std::vector<scan::Beacon> b;
        for (const auto& x : beacons) b.push_back({x[0], x[1], x[2]});
        const auto fix =
            scan::gauss_newton_fix(values, b, z_mr, scan::parse_mode(mode), {init[0], init[1]});
        py::dict out;
        out["position"] = py::make_tuple(fix.position.x, fix.position.y);
        out["residual_rms"] = fix.residual_rms;
        out["iterations"] = fix.iterations;
        out["converged"] = fix.converged;
        return out;
      },
      py::arg("values"), py::arg("beacons"), py::arg("z_mr"), py::arg("mode"), py::arg("init"));

  m.def(
      "analytical_tc",
      [](std::array<double, 2> la, std::array<double, 2> ga, std::array<double, 2> lb,
         std::array<double, 2> gb) {
        const auto t = scan::analytical_tc({{la[0], la[1]}, {ga[0], ga[1]}, 0},
                                           {{lb[0], lb[1]}, {gb[0], gb[1]}, 1});
        return std::array<double, 4>{t.t1, t.t2, t.t3, t.t4};
      },
      py::arg("local_a"), py::arg("global_a"), py::arg("local_b"), py::arg("global_b"));

  m.def(
      "transform_point",
      [](std::array<double, 2> p, std::array<double, 4> t) {
        const auto q = scan::transform_point({p[0], p[1]}, {t[0], t[1], t[2], t[3]});
        return std::array<double, 2>{q.x, q.y};
      },
      py::arg("point"), py::arg("transform"));

  m.def(
      "compute_cdf",
      [](const std::vector<double>& samples) {
        const auto cdf = scan::compute_cdf(samples);
        return py::make_tuple(py::array_t<double>(cdf.errors.size(), cdf.errors.data()),
                              py::array_t<double>(cdf.fractions.size(), cdf.fractions.data()));
      },
      py::arg("samples"));
}
