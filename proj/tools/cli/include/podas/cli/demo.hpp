#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "podas/agent/agent.hpp"
#include "podas/cli/scenario.hpp"
#include "podas/detection.hpp"

namespace podas::cli {

enum class DemoTransport { Http, Local };

struct DemoOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  DemoTransport transport = DemoTransport::Http;
};

struct DemoReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t n_potholes = 0;
  std::size_t n_readings = 0;
  detection::Thresholds thresholds;
  agent::SessionReport session;
  std::vector<detection::PotholeEvent> events;
  detection::Metrics metrics;
  double recall_floor = 0.0;

  /// Readings reached the server whenever the trace was non-empty.
  bool delivered() const noexcept { return n_readings == 0 || session.acked > 0; }
  /// recall >= floor; a scenario without potholes passes vacuously.
  bool passed() const noexcept {
    return delivered() && (!metrics.recall || *metrics.recall >= recall_floor);
  }
};

/// Calibrates on a pothole-free reference drive as the scenario describes.
detection::Thresholds reference_thresholds(const ScenarioConfig& s);

/// Runs the whole pipeline in one process on a simulated clock: simulate,
/// calibrate, serve, drive the agent session, query, score.
DemoReport run_demo(ScenarioConfig scenario, const DemoOptions& options = {});

json report_to_json(const DemoReport& r);
std::string format_report(const DemoReport& r);

}  // namespace podas::cli
