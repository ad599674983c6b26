#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "podas/agent/connectivity.hpp"
#include "podas/codec.hpp"
#include "podas/detection.hpp"
#include "podas/roadsim.hpp"

namespace podas::cli {

struct CalibrationRun {
  double length_m = 500.0;
  bool zero_noise = false;  // otherwise the scenario noise model applies
  detection::CalibrationOptions options;
};

/// One end-to-end run. Every random stream derives from `seed`:
/// the road layout uses seed, the trace noise seed + 1 and the calibration
/// drive seed + 2.
struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 42;
  roadsim::ProfileParams road;
  roadsim::VehicleConfig vehicle;
  roadsim::NoiseModel noise;
  std::string node_id = "bus-01";
  std::int64_t t0_ms = 1'700'000'000'000;
  agent::ConnectivityProfile connectivity = agent::ConnectivityProfile::Depot;
  std::size_t batch_cap = 50;
  /// Fixed thresholds; when absent they come from the calibration drive.
  std::optional<detection::Thresholds> thresholds;
  CalibrationRun calibration;
  double cluster_radius_m = detection::kDefaultClusterRadiusM;
  double match_radius_m = 10.0;
  double recall_floor = 0.8;

  std::uint64_t trace_seed() const noexcept { return seed + 1; }
  std::uint64_t calibration_seed() const noexcept { return seed + 2; }
};

void validate(const ScenarioConfig& s);

ScenarioConfig scenario_from_json(const json& j);
json scenario_to_json(const ScenarioConfig& s);
ScenarioConfig read_scenario(const std::filesystem::path& path);

}  // namespace podas::cli
