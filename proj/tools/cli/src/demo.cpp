#include "podas/cli/demo.hpp"

#include <unistd.h>

#include <cstdio>
#include <sstream>

#include "podas/agent/http_transport.hpp"
#include "podas/server/http_api.hpp"
#include "podas/server/ingest_service.hpp"

namespace podas::cli {
namespace {

class TempDir {
 public:
  TempDir() {
    auto pattern = (std::filesystem::temp_directory_path() / "podas-demo-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw Error("cannot create a temporary directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

std::string fmt_ratio(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

detection::Thresholds reference_thresholds(const ScenarioConfig& s) {
  roadsim::ProfileParams ref = s.road;
  ref.length_m = s.calibration.length_m;
  ref.n_potholes = 0;
  ref.seed = s.calibration_seed();
  const auto road = roadsim::generate_profile(ref);

  auto noise = s.noise;
  if (s.calibration.zero_noise) noise.sigma_ultra_in = noise.sigma_accel = 0.0;
  constexpr std::int64_t kDayMs = 86'400'000;
  const auto trace = roadsim::sample_trace(road, s.vehicle, noise, s.node_id, s.t0_ms - kDayMs,
                                           s.calibration_seed());
  return detection::calibrate(trace, s.calibration.options);
}

DemoReport run_demo(ScenarioConfig s, const DemoOptions& options) {
  if (options.seed) s.seed = *options.seed;
  s.road.seed = s.seed;
  validate(s);

  DemoReport report;
  report.scenario = s.name;
  report.seed = s.seed;
  report.recall_floor = s.recall_floor;

  const auto profile = roadsim::generate_profile(s.road);
  const auto trace =
      roadsim::sample_trace(profile, s.vehicle, s.noise, s.node_id, s.t0_ms, s.trace_seed());
  const auto truth = roadsim::export_ground_truth(profile);
  report.n_potholes = truth.size();
  report.n_readings = trace.size();
  report.thresholds = s.thresholds ? *s.thresholds : reference_thresholds(s);

  TempDir work;
  server::IngestService service(
      {work.path() / "server", report.thresholds, s.cluster_radius_m, /*fsync=*/false});

  std::unique_ptr<server::HttpApi> api;
  std::unique_ptr<Transport> transport;
  if (options.transport == DemoTransport::Http) {
    api = std::make_unique<server::HttpApi>(service);
    const int port = api->bind("127.0.0.1", 0);
    api->start();
    transport = std::make_unique<agent::HttpTransport>("http://127.0.0.1:" + std::to_string(port));
  } else {
    transport = std::make_unique<server::LocalTransport>(service);
  }

  agent::AgentConfig cfg;
  cfg.node_id = s.node_id;
  cfg.spool_dir = work.path() / "spool";
  cfg.batch_cap = s.batch_cap;
  cfg.fsync = false;
  agent::SimulatedClock clock(s.t0_ms);
  agent::Agent node(cfg, *transport, clock);
  const auto first = trace.empty() ? s.t0_ms : trace.front().ts_ms;
  const auto last = trace.empty() ? s.t0_ms : trace.back().ts_ms;
  const auto schedule = agent::ConnectivitySchedule::named(s.connectivity, first, last);
  report.session = node.run_session(trace, schedule);
  if (api) api->stop();

  report.events = service.get_potholes();
  report.metrics = detection::detection_metrics(report.events, truth, s.match_radius_m);
  return report;
}

json report_to_json(const DemoReport& r) {
  const auto& s = r.session;
  return json{
      {"scenario", r.scenario},
      {"seed", r.seed},
      {"potholes", r.n_potholes},
      {"readings", r.n_readings},
      {"thresholds", r.thresholds},
      {"session",
       {{"carried_over", s.carried_over},
        {"enqueued", s.enqueued},
        {"sent", s.sent},
        {"acked", s.acked},
        {"quarantined", s.quarantined},
        {"remaining", s.remaining},
        {"batches", s.batches},
        {"retries", s.retries},
        {"acked_during_drive", s.acked_during_drive},
        {"max_latency_ms", s.max_latency_ms}}},
      {"events", r.events.size()},
      {"matched", r.metrics.matched},
      {"missed", r.metrics.missed},
      {"spurious", r.metrics.spurious},
      {"recall", opt_json(r.metrics.recall)},
      {"precision", opt_json(r.metrics.precision)},
      {"recall_floor", r.recall_floor},
      {"passed", r.passed()},
  };
}

std::string format_report(const DemoReport& r) {
  std::ostringstream out;
  const auto& t = r.thresholds;
  out << "scenario   " << r.scenario << " (seed " << r.seed << ")\n"
      << "road       " << r.n_potholes << " potholes, " << r.n_readings << " readings\n"
      << "thresholds base " << t.ultrasonic_base_in << " in, cutoff " << t.severe_cutoff_in
      << " in, accel " << t.accel_z_threshold << "\n"
      << "delivery   " << r.session.acked << " acked, " << r.session.quarantined
      << " quarantined, " << r.session.remaining << " remaining in " << r.session.batches
      << " batches\n"
      << "events     " << r.events.size() << "\n"
      << "matched    " << r.metrics.matched << "/" << r.n_potholes << " (missed "
      << r.metrics.missed << ", spurious " << r.metrics.spurious << ")\n"
      << "recall     " << fmt_ratio(r.metrics.recall) << " (floor " << r.recall_floor << ")\n"
      << "precision  " << fmt_ratio(r.metrics.precision) << "\n"
      << "result     " << (r.passed() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace podas::cli
