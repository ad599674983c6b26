#include "podas/cli/commands.hpp"

#include <httplib.h>
#include <signal.h>

#include <charconv>
#include <iostream>

#include "podas/agent/http_transport.hpp"
#include "podas/server/http_api.hpp"
#include "podas/server/ingest_service.hpp"

namespace podas::cli {
namespace {

std::string fmt_opt(const std::optional<double>& v) {
  return v ? std::to_string(*v) : std::string("n/a");
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::pair<std::string, int> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw UsageError("listen address must be host:port");
  int port = -1;
  const auto* first = listen.data() + colon + 1;
  const auto* last = listen.data() + listen.size();
  auto [p, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || p != last || port < 0 || port > 65535) {
    throw UsageError("bad port in listen address: " + listen);
  }
  return {listen.substr(0, colon), port};
}

server::PotholeFilter filter_from(const ExportArgs& a) {
  server::PotholeFilter f;
  if (a.bbox) {
    f.bbox = server::parse_bbox(*a.bbox);
    if (!f.bbox) throw UsageError("--bbox must be min_lon,min_lat,max_lon,max_lat");
  }
  f.since_ms = a.since_ms;
  if (a.min_severity) {
    f.min_severity = parse_severity(*a.min_severity);
    if (!f.min_severity) throw UsageError("unknown severity: " + *a.min_severity);
  }
  return f;
}

void write_or_print(const std::optional<std::filesystem::path>& path, const json& doc,
                    std::ostream& out) {
  if (path) {
    write_json_file(*path, doc);
  } else {
    out << doc.dump(2) << '\n';
  }
}

}  // namespace

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  roadsim::ProfileParams params;
  params.length_m = a.length_m;
  params.n_potholes = a.potholes;
  params.seed = a.seed;
  const auto profile = roadsim::generate_profile(params);

  const roadsim::VehicleConfig vehicle;
  const auto noise = a.zero_noise ? roadsim::NoiseModel::zero() : roadsim::NoiseModel{};
  const auto trace = roadsim::sample_trace(profile, vehicle, noise, a.node_id, a.t0_ms, a.seed + 1);

  write_profile(a.out_profile, profile);
  write_trace(a.out_trace, trace);
  out << "wrote " << profile.potholes.size() << " potholes to " << a.out_profile.string()
      << " and " << trace.size() << " readings to " << a.out_trace.string() << '\n';
  return kExitOk;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const auto trace = read_trace(a.trace);
  const auto t = detection::calibrate(trace, {a.k_sigma, a.severe_delta_in});
  write_or_print(a.out, t, out);
  if (a.out) out << "wrote thresholds to " << a.out->string() << '\n';
  return kExitOk;
}

int cmd_agent(const AgentArgs& a, std::ostream& out) {
  const auto profile = agent::parse_profile(a.profile);
  if (!profile || *profile == agent::ConnectivityProfile::Custom) {
    throw UsageError("--profile must be always_on, depot or pilot");
  }
  const auto trace = read_trace(a.trace);
  if (trace.empty()) {
    out << "trace is empty; nothing to send\n";
    return kExitOk;
  }
  for (const auto& r : trace) {
    if (r.node_id != trace.front().node_id) {
      throw ValidationError("trace mixes nodes " + trace.front().node_id + " and " + r.node_id +
                            "; run one agent per node");
    }
  }

  agent::AgentConfig cfg;
  cfg.node_id = trace.front().node_id;
  cfg.spool_dir = a.spool_dir;
  cfg.batch_cap = a.batch_cap;
  agent::HttpTransport transport(a.server);
  agent::SimulatedClock clock(trace.front().ts_ms);
  agent::Agent node(cfg, transport, clock);
  const auto schedule =
      agent::ConnectivitySchedule::named(*profile, trace.front().ts_ms, trace.back().ts_ms);
  const auto r = node.run_session(trace, schedule);

  out << json{{"node_id", cfg.node_id},
              {"carried_over", r.carried_over},
              {"enqueued", r.enqueued},
              {"sent", r.sent},
              {"acked", r.acked},
              {"quarantined", r.quarantined},
              {"remaining", r.remaining},
              {"batches", r.batches},
              {"retries", r.retries}}
             .dump()
      << '\n';
  if (r.remaining > 0) {
    std::cerr << "error: " << r.remaining << " readings still queued in "
              << a.spool_dir.string() << " (server unreachable?)\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  const auto [host, port] = split_listen(a.listen);
  server::ServerOptions opts;
  opts.data_dir = a.data_dir;
  opts.cluster_radius_m = a.cluster_radius_m;
  if (a.thresholds) opts.initial_thresholds = read_json_file(*a.thresholds).get<detection::Thresholds>();

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  server::IngestService service(opts);
  server::HttpApi api(service, {a.ui_dir});
  const int bound = api.bind(host, port);
  api.start();
  out << "listening on " << host << ":" << bound << " (data " << a.data_dir.string()
      << ", version " << service.version() << ")" << std::endl;

  int sig = 0;
  sigwait(&stop_signals, &sig);
  api.stop();
  out << "stopped" << std::endl;
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto events = read_events(a.events);
  const auto truth = read_truth(a.truth);
  const auto m = detection::detection_metrics(events, truth, a.radius_m);
  if (a.json) {
    out << json{{"events", events.size()},
                {"truth", truth.size()},
                {"matched", m.matched},
                {"missed", m.missed},
                {"spurious", m.spurious},
                {"recall", opt_json(m.recall)},
                {"precision", opt_json(m.precision)}}
               .dump()
        << '\n';
  } else {
    out << "events " << events.size() << ", truth " << truth.size() << ", matched "
        << m.matched << "\nrecall " << fmt_opt(m.recall) << "\nprecision "
        << fmt_opt(m.precision) << '\n';
  }
  return kExitOk;
}

int cmd_export(const ExportArgs& a, std::ostream& out) {
  if (a.format != "geojson" && a.format != "json") {
    throw UsageError("--format must be geojson or json");
  }
  if (a.data_dir.has_value() == a.server.has_value()) {
    throw UsageError("give exactly one of --data-dir or --server");
  }
  const auto filter = filter_from(a);

  json doc;
  if (a.data_dir) {
    if (!std::filesystem::exists(*a.data_dir / "commit.log")) {
      throw Error("no server data in " + a.data_dir->string());
    }
    server::IngestService service({*a.data_dir, {}, detection::kDefaultClusterRadiusM, false});
    if (a.format == "geojson") {
      doc = service.export_geojson(filter);
    } else {
      doc = service.get_potholes(filter);
    }
  } else {
    httplib::Client client(*a.server);
    httplib::Params params;
    if (a.bbox) params.emplace("bbox", *a.bbox);
    if (a.since_ms) params.emplace("since_ms", std::to_string(*a.since_ms));
    if (a.min_severity) params.emplace("min_severity", *a.min_severity);
    const std::string path = a.format == "geojson" ? "/api/v1/potholes.geojson" : "/api/v1/potholes";
    const auto res = client.Get(path, params, httplib::Headers{});
    if (!res) throw Error("cannot reach " + *a.server + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error("server answered " + std::to_string(res->status) + ": " + res->body);
    }
    doc = json::parse(res->body);
  }
  write_or_print(a.out, doc, out);
  return kExitOk;
}

int cmd_demo(const DemoArgs& a, std::ostream& out, std::ostream& err) {
  DemoOptions opts;
  opts.seed = a.seed;
  if (a.transport == "http") {
    opts.transport = DemoTransport::Http;
  } else if (a.transport == "local") {
    opts.transport = DemoTransport::Local;
  } else {
    throw UsageError("--transport must be http or local");
  }

  const auto report = run_demo(read_scenario(a.scenario), opts);
  if (a.out_geojson) write_json_file(*a.out_geojson, to_geojson(report.events));
  if (a.json) {
    out << report_to_json(report).dump(2) << '\n';
  } else {
    out << format_report(report);
  }
  if (!report.delivered()) {
    err << "error: 0 readings delivered (" << report.session.remaining
        << " still queued on the node)\n";
    return kExitFailure;
  }
  return report.passed() ? kExitOk : kExitFailure;
}

}  // namespace podas::cli
