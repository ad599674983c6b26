#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "podas/cli/demo.hpp"

namespace podas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag values detected after parsing; main maps it to kExitUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct SimulateArgs {
  double length_m = 1000.0;
  std::size_t potholes = 25;
  std::uint64_t seed = 42;
  std::filesystem::path out_profile = "profile.jsonl";
  std::filesystem::path out_trace = "trace.jsonl";
  std::string node_id = "bus-01";
  std::int64_t t0_ms = 1'700'000'000'000;
  bool zero_noise = false;
};

struct CalibrateArgs {
  std::filesystem::path trace;
  double k_sigma = detection::kDefaultKSigma;
  double severe_delta_in = detection::kDefaultSevereDeltaIn;
  std::optional<std::filesystem::path> out;
};

struct AgentArgs {
  std::filesystem::path trace;
  std::string profile = "always_on";
  std::string server = "http://127.0.0.1:8080";
  std::size_t batch_cap = 50;
  std::filesystem::path spool_dir = "podas-spool";
};

struct ServeArgs {
  std::string listen = "127.0.0.1:8080";
  std::filesystem::path data_dir = "podas-data";
  std::optional<std::filesystem::path> thresholds;
  std::optional<std::filesystem::path> ui_dir;
  double cluster_radius_m = detection::kDefaultClusterRadiusM;
};

struct EvaluateArgs {
  std::filesystem::path events;
  std::filesystem::path truth;
  double radius_m = 10.0;
  bool json = false;
};

struct ExportArgs {
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::string> server;
  std::string format = "geojson";
  std::optional<std::filesystem::path> out;
  std::optional<std::string> bbox;
  std::optional<std::int64_t> since_ms;
  std::optional<std::string> min_severity;
};

struct DemoArgs {
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::optional<std::filesystem::path> out_geojson;
  std::string transport = "http";
};

// Each command writes its report to `out` and returns an exit code. Runtime
// failures surface as exceptions.
int cmd_simulate(const SimulateArgs& a, std::ostream& out);
int cmd_calibrate(const CalibrateArgs& a, std::ostream& out);
int cmd_agent(const AgentArgs& a, std::ostream& out);
int cmd_serve(const ServeArgs& a, std::ostream& out);
int cmd_evaluate(const EvaluateArgs& a, std::ostream& out);
int cmd_export(const ExportArgs& a, std::ostream& out);
int cmd_demo(const DemoArgs& a, std::ostream& out, std::ostream& err);

}  // namespace podas::cli
