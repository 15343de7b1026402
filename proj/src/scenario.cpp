#include "scan/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace scan {

using nlohmann::json;

std::string_view to_string(ClusterKind kind) {
  return kind == ClusterKind::GloballyReferenced ? "global" : "local";
}

std::string_view to_string(PositioningMode mode) {
  return mode == PositioningMode::Spherical ? "spherical" : "hyperbolic";
}

PositioningMode parse_mode(std::string_view text) {
  if (text == "spherical") return PositioningMode::Spherical;
  if (text == "hyperbolic") return PositioningMode::Hyperbolic;
  throw ScenarioError("unknown positioning mode '" + std::string(text) + "'");
}

const UlpsDescriptor* ScenarioConfig::find(std::string_view id) const {
  for (const auto& u : ulps_list) {
    if (u.id == id) return &u;
  }
  return nullptr;
}

std::vector<Beacon> make_square_cluster(Point2 center, double diagonal, double height,
                                        bool with_center) {
  if (!(diagonal > 0.0)) throw ScenarioError("cluster diagonal must be positive");
  const double h = diagonal / 2.0 / std::sqrt(2.0);
  std::vector<Beacon> out = {
      {center.x + h, center.y + h, height},
      {center.x - h, center.y + h, height},
      {center.x - h, center.y - h, height},
      {center.x + h, center.y - h, height},
  };
  if (with_center) out.push_back({center.x, center.y, height});
  return out;
}

bool in_coverage(Point2 p, const UlpsDescriptor& u) {
  return distance(p, u.coverage_center) <= u.coverage_radius;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ScenarioError(what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate(const ScenarioConfig& c) {
  require(!c.ulps_list.empty(), "ulps: at least one cluster required");
  require(!c.waypoints.empty(), "waypoints: list is empty");
  require(finite(c.speed) && c.speed > 0.0, "speed: must be positive");
  require(finite(c.d_min) && c.d_min > 0.0, "d_min: must be positive");
  require(finite(c.z_mr), "z_mr: must be finite");
  require(c.noise.sigma_d_odo >= 0.0, "noise.sigma_d_odo: must be >= 0");
  require(c.noise.sigma_theta_odo >= 0.0, "noise.sigma_theta_odo: must be >= 0");
  require(c.noise.sigma_us >= 0.0, "noise.sigma_us: must be >= 0");
  require(c.inverse_correct_count >= 0, "inverse_correct_count: must be >= 0");
  require(c.max_points >= 2, "max_points: must be >= 2");

  const auto& f = c.filter;
  require(f.sigma_w_xy.value_or(0.0) >= 0.0, "filter.sigma_w_xy: must be >= 0");
  require(f.sigma_w_theta.value_or(0.0) >= 0.0, "filter.sigma_w_theta: must be >= 0");
  require(f.min_sigma_v > 0.0, "filter.min_sigma_v: must be positive");
  require(f.init_sigma_xy.value_or(1.0) > 0.0, "filter.init_sigma_xy: must be positive");
  require(f.init_sigma_theta.value_or(1.0) > 0.0, "filter.init_sigma_theta: must be positive");
  require(f.ukf.alpha > 0.0 && f.ukf.alpha <= 1.0, "filter.ukf.alpha: must be in (0, 1]");
  constexpr double kStates = 3.0;
  require(f.ukf.kappa >= 0.0 && f.ukf.kappa <= 3.0 - kStates,
          "filter.ukf.kappa: must be in [0, 3 - L] with L = 3");
  require(f.hinf_gamma > 0.0, "filter.hinf_gamma: must be positive");

  std::set<std::string> ids;
  bool any_global = false;
  for (const auto& u : c.ulps_list) {
    const std::string where = "ulps[" + u.id + "]";
    require(!u.id.empty(), "ulps: cluster id is empty");
    require(ids.insert(u.id).second, where + ".id: duplicate");
    require(u.id != kGlobalFrame, where + ".id: '" + std::string(kGlobalFrame) + "' is reserved");
    require(u.beacons.size() >= min_beacons(c.mode),
            where + ".beacons: " + std::to_string(u.beacons.size()) + " beacons, " +
                std::string(to_string(c.mode)) + " mode needs " +
                std::to_string(min_beacons(c.mode)));
    require(u.coverage_radius > 0.0, where + ".coverage_radius: must be positive");
    for (const auto& b : u.beacons) {
      require(b.z > 0.0, where + ".beacons: beacon height must be positive");
      require(b.z > c.z_mr, where + ".beacons: beacon below receiver height z_mr");
    }
    if (u.is_global()) {
      any_global = true;
    } else {
      require(u.truth_beacons.size() == u.beacons.size(),
              where + ".truth_beacons: must match beacons in length");
      for (std::size_t i = 0; i < u.beacons.size(); ++i) {
        require(std::abs(u.truth_beacons[i].z - u.beacons[i].z) < 1e-9,
                where + ".truth_beacons: heights must match local beacons");
      }
    }
  }
  require(any_global, "ulps: no globally referenced cluster");

  const Point2 start = c.waypoints.front();
  bool start_covered = false;
  for (const auto& u : c.ulps_list) {
    if (u.is_global() && in_coverage(start, u)) start_covered = true;
  }
  require(start_covered, "waypoints[0]: path must start inside a globally referenced cluster");
}

namespace {

json point_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError("expected [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json beacons_json(const std::vector<Beacon>& bs) {
  json out = json::array();
  for (const auto& b : bs) out.push_back(json::array({b.x, b.y, b.z}));
  return out;
}

std::vector<Beacon> beacons_from(const json& j) {
  std::vector<Beacon> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) throw ScenarioError("beacon must be [x, y, z]");
    out.push_back({e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()});
  }
  return out;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Absent or null leaves the value unset (derived).
void read_opt(const json& j, const char* key, std::optional<double>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<double>();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  try {
    for (const auto& u : j.at("ulps")) {
      UlpsDescriptor d;
      d.id = u.at("id").get<std::string>();
      const auto kind = u.at("kind").get<std::string>();
      if (kind == "global") {
        d.kind = ClusterKind::GloballyReferenced;
      } else if (kind == "local") {
        d.kind = ClusterKind::LocallyReferenced;
      } else {
        throw ScenarioError("ulps[" + d.id + "].kind: expected 'global' or 'local'");
      }
      d.beacons = beacons_from(u.at("beacons"));
      if (u.contains("truth_beacons")) d.truth_beacons = beacons_from(u.at("truth_beacons"));
      d.coverage_center = point_from(u.at("coverage_center"));
      read_opt(u, "coverage_radius", d.coverage_radius);
      c.ulps_list.push_back(std::move(d));
    }
    for (const auto& w : j.at("waypoints")) c.waypoints.push_back(point_from(w));
    read_opt(j, "speed", c.speed);
    read_opt(j, "z_mr", c.z_mr);
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    read_opt(j, "d_min", c.d_min);
    read_opt(j, "seed", c.seed);
    read_opt(j, "inverse_correct_count", c.inverse_correct_count);
    read_opt(j, "max_points", c.max_points);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      read_opt(n, "sigma_d_odo", c.noise.sigma_d_odo);
      read_opt(n, "sigma_theta_odo", c.noise.sigma_theta_odo);
      read_opt(n, "sigma_us", c.noise.sigma_us);
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      read_opt(f, "sigma_w_xy", c.filter.sigma_w_xy);
      read_opt(f, "sigma_w_theta", c.filter.sigma_w_theta);
      read_opt(f, "min_sigma_v", c.filter.min_sigma_v);
      read_opt(f, "init_sigma_xy", c.filter.init_sigma_xy);
      read_opt(f, "init_sigma_theta", c.filter.init_sigma_theta);
      read_opt(f, "hinf_gamma", c.filter.hinf_gamma);
      if (f.contains("ukf")) {
        read_opt(f.at("ukf"), "alpha", c.filter.ukf.alpha);
        read_opt(f.at("ukf"), "beta", c.filter.ukf.beta);
        read_opt(f.at("ukf"), "kappa", c.filter.ukf.kappa);
      }
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  validate(c);
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["d_min"] = c.d_min;
  j["seed"] = c.seed;
  j["z_mr"] = c.z_mr;
  j["speed"] = c.speed;
  j["inverse_correct_count"] = c.inverse_correct_count;
  j["max_points"] = c.max_points;
  j["noise"] = {{"sigma_d_odo", c.noise.sigma_d_odo},
                {"sigma_theta_odo", c.noise.sigma_theta_odo},
                {"sigma_us", c.noise.sigma_us}};
  j["filter"] = {{"sigma_w_xy", opt_json(c.filter.sigma_w_xy)},
                 {"sigma_w_theta", opt_json(c.filter.sigma_w_theta)},
                 {"min_sigma_v", c.filter.min_sigma_v},
                 {"init_sigma_xy", opt_json(c.filter.init_sigma_xy)},
                 {"init_sigma_theta", opt_json(c.filter.init_sigma_theta)},
                 {"hinf_gamma", c.filter.hinf_gamma},
                 {"ukf",
                  {{"alpha", c.filter.ukf.alpha},
                   {"beta", c.filter.ukf.beta},
                   {"kappa", c.filter.ukf.kappa}}}};
  json wps = json::array();
  for (const auto& w : c.waypoints) wps.push_back(point_json(w));
  j["waypoints"] = wps;
  json ulps = json::array();
  for (const auto& u : c.ulps_list) {
    json e = {{"id", u.id},
              {"kind", to_string(u.kind)},
              {"coverage_center", point_json(u.coverage_center)},
              {"coverage_radius", u.coverage_radius},
              {"beacons", beacons_json(u.beacons)}};
    if (!u.truth_beacons.empty()) e["truth_beacons"] = beacons_json(u.truth_beacons);
    ulps.push_back(e);
  }
  j["ulps"] = ulps;
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario parse error in '" + path.string() + "': " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file '" + path.string() + "'");
  out << scenario_to_json(config).dump(2) << '\n';
}

namespace {

// Local frame: square centred on the origin, rotated by `heading` and shifted
// to `center` in the global frame.
UlpsDescriptor local_cluster(std::string id, Point2 center, double heading, double height) {
  UlpsDescriptor u;
  u.id = std::move(id);
  u.kind = ClusterKind::LocallyReferenced;
  u.beacons = make_square_cluster({0.0, 0.0}, 1.0, height);
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  for (const auto& b : u.beacons) {
    u.truth_beacons.push_back(
        {center.x + c * b.x - s * b.y, center.y + s * b.x + c * b.y, b.z});
  }
  u.coverage_center = center;
  u.coverage_radius = 5.0;
  return u;
}

UlpsDescriptor global_cluster(std::string id, Point2 center, double height) {
  UlpsDescriptor u;
  u.id = std::move(id);
  u.kind = ClusterKind::GloballyReferenced;
  u.beacons = make_square_cluster(center, 1.0, height, /*with_center=*/true);
  u.coverage_center = center;
  u.coverage_radius = 5.0;
  return u;
}

}  // namespace

ScenarioConfig default_scenario() {
  constexpr double kHeight = 3.5;
  ScenarioConfig c;
  // An L-shaped corridor: GR clusters at both ends, LR clusters every 2 m of
  // path, alternating sides of the corridor, with arbitrary mounting rotations.
  c.ulps_list.push_back(global_cluster("GR1", {0.0, 0.0}, kHeight));
  c.ulps_list.push_back(local_cluster("LR1", {2.0, 0.8}, 0.4, kHeight));
  c.ulps_list.push_back(local_cluster("LR2", {4.0, -0.8}, -1.1, kHeight));
  c.ulps_list.push_back(local_cluster("LR3", {6.0, 0.8}, 2.3, kHeight));
  c.ulps_list.push_back(local_cluster("LR4", {8.0, -0.8}, -2.8, kHeight));
  c.ulps_list.push_back(local_cluster("LR5", {7.2, 2.0}, 0.9, kHeight));
  c.ulps_list.push_back(local_cluster("LR6", {8.8, 4.0}, -0.3, kHeight));
  c.ulps_list.push_back(local_cluster("LR7", {7.2, 6.0}, 1.7, kHeight));
  c.ulps_list.push_back(global_cluster("GR2", {8.0, 8.0}, kHeight));
  c.waypoints = {{-1.5, 0.0}, {8.0, 0.0}, {8.0, 9.5}};
  return c;
}

}  // namespace scan
