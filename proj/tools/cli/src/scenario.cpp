#include "podas/cli/scenario.hpp"

#include <cmath>

namespace podas::cli {
namespace {

roadsim::Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("ranges are [min, max] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

void validate(const ScenarioConfig& s) {
  roadsim::validate(s.vehicle);
  roadsim::validate(s.noise);
  if (s.node_id.empty()) throw ValidationError("scenario node_id is empty");
  if (s.batch_cap == 0) throw ValidationError("scenario batch_cap must be positive");
  if (s.thresholds) detection::validate(*s.thresholds);
  if (!(s.calibration.length_m > 0.0)) throw ValidationError("calibration length must be positive");
  if (!(s.cluster_radius_m > 0.0) || !(s.match_radius_m > 0.0)) {
    throw ValidationError("cluster and match radii must be positive");
  }
  if (!(s.recall_floor >= 0.0 && s.recall_floor <= 1.0)) {
    throw ValidationError("recall_floor must lie in [0, 1]");
  }
  if (s.connectivity == agent::ConnectivityProfile::Custom) {
    throw ValidationError("scenario connectivity must be a named profile");
  }
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig s;
  read_opt(j, "name", s.name);
  read_opt(j, "seed", s.seed);
  s.road.seed = s.seed;

  if (j.contains("road")) {
    const auto& r = j.at("road");
    read_opt(r, "length_m", s.road.length_m);
    read_opt(r, "n_potholes", s.road.n_potholes);
    if (r.contains("depth_range_in")) s.road.depth_range_in = range_from(r.at("depth_range_in"));
    if (r.contains("length_range_m")) s.road.length_range_m = range_from(r.at("length_range_m"));
    read_opt(r, "origin", s.road.origin);
    read_opt(r, "bearing_deg", s.road.bearing_deg);
  }
  if (j.contains("vehicle")) {
    const auto& v = j.at("vehicle");
    read_opt(v, "ride_height_in", s.vehicle.ride_height_in);
    read_opt(v, "speed_mps", s.vehicle.speed_mps);
    read_opt(v, "sample_spacing_m", s.vehicle.sample_spacing_m);
    if (v.contains("samples_per_km")) {
      s.vehicle.sample_spacing_m = 1000.0 / v.at("samples_per_km").get<double>();
    }
    read_opt(v, "axle_footprint_m", s.vehicle.axle_footprint_m);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    read_opt(n, "sigma_ultra_in", s.noise.sigma_ultra_in);
    read_opt(n, "sigma_accel", s.noise.sigma_accel);
    read_opt(n, "accel_base", s.noise.accel_base);
    read_opt(n, "accel_gain", s.noise.accel_gain);
  }
  if (j.contains("node")) {
    const auto& n = j.at("node");
    read_opt(n, "node_id", s.node_id);
    read_opt(n, "t0_ms", s.t0_ms);
    read_opt(n, "batch_cap", s.batch_cap);
    if (n.contains("connectivity")) {
      const auto name = n.at("connectivity").get<std::string>();
      const auto p = agent::parse_profile(name);
      if (!p) throw ValidationError("unknown connectivity profile: " + name);
      s.connectivity = *p;
    }
  }
  if (j.contains("thresholds")) s.thresholds = j.at("thresholds").get<detection::Thresholds>();
  if (j.contains("calibration")) {
    const auto& c = j.at("calibration");
    read_opt(c, "length_m", s.calibration.length_m);
    read_opt(c, "zero_noise", s.calibration.zero_noise);
    read_opt(c, "k_sigma", s.calibration.options.k_sigma);
    read_opt(c, "severe_delta_in", s.calibration.options.severe_delta_in);
  }
  if (j.contains("detection")) {
    const auto& d = j.at("detection");
    read_opt(d, "cluster_radius_m", s.cluster_radius_m);
    read_opt(d, "match_radius_m", s.match_radius_m);
    read_opt(d, "recall_floor", s.recall_floor);
  }
  validate(s);
  return s;
}

json scenario_to_json(const ScenarioConfig& s) {
  json j{
      {"name", s.name},
      {"seed", s.seed},
      {"road",
       {{"length_m", s.road.length_m},
        {"n_potholes", s.road.n_potholes},
        {"depth_range_in", {s.road.depth_range_in.min, s.road.depth_range_in.max}},
        {"length_range_m", {s.road.length_range_m.min, s.road.length_range_m.max}},
        {"origin", s.road.origin},
        {"bearing_deg", s.road.bearing_deg}}},
      {"vehicle",
       {{"ride_height_in", s.vehicle.ride_height_in},
        {"speed_mps", s.vehicle.speed_mps},
        {"sample_spacing_m", s.vehicle.sample_spacing_m},
        {"axle_footprint_m", s.vehicle.axle_footprint_m}}},
      {"noise",
       {{"sigma_ultra_in", s.noise.sigma_ultra_in},
        {"sigma_accel", s.noise.sigma_accel},
        {"accel_base", s.noise.accel_base},
        {"accel_gain", s.noise.accel_gain}}},
      {"node",
       {{"node_id", s.node_id},
        {"t0_ms", s.t0_ms},
        {"connectivity", agent::to_string(s.connectivity)},
        {"batch_cap", s.batch_cap}}},
      {"calibration",
       {{"length_m", s.calibration.length_m},
        {"zero_noise", s.calibration.zero_noise},
        {"k_sigma", s.calibration.options.k_sigma},
        {"severe_delta_in", s.calibration.options.severe_delta_in}}},
      {"detection",
       {{"cluster_radius_m", s.cluster_radius_m},
        {"match_radius_m", s.match_radius_m},
        {"recall_floor", s.recall_floor}}},
  };
  if (s.thresholds) j["thresholds"] = *s.thresholds;
  return j;
}

ScenarioConfig read_scenario(const std::filesystem::path& path) {
  const auto doc = read_json_file(path);
  try {
    return scenario_from_json(doc);
  } catch (const json::exception& e) {
    throw FormatError(e.what(), 0, path.string());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace podas::cli
