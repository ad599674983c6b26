#include <CLI11.hpp>

#include <iostream>

#include "podas/cli/commands.hpp"

namespace cli = podas::cli;

int main(int argc, char** argv) {
  CLI::App app{"podas: road pothole detection pipeline"};
  app.require_subcommand(1);

  cli::SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a road profile and a sensor trace");
  simulate->add_option("--length-m", sim.length_m, "Road length in meters")->capture_default_str();
  simulate->add_option("--potholes", sim.potholes, "Number of potholes")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Layout seed; trace noise uses seed + 1")
      ->capture_default_str();
  simulate->add_option("--out-profile", sim.out_profile)->capture_default_str();
  simulate->add_option("--out-trace", sim.out_trace)->capture_default_str();
  simulate->add_option("--node-id", sim.node_id)->capture_default_str();
  simulate->add_option("--t0-ms", sim.t0_ms)->capture_default_str();
  simulate->add_flag("--zero-noise", sim.zero_noise, "Noise-free sensors");

  cli::CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Derive thresholds from a reference trace");
  calibrate->add_option("--trace", cal.trace)->required()->check(CLI::ExistingFile);
  calibrate->add_option("--k-sigma", cal.k_sigma)->capture_default_str();
  calibrate->add_option("--severe-delta-in", cal.severe_delta_in)->capture_default_str();
  calibrate->add_option("--out", cal.out, "Thresholds JSON file (default: stdout)");

  cli::AgentArgs ag;
  auto* agent = app.add_subcommand("agent", "Replay a trace through a store-and-forward node");
  agent->add_option("--trace", ag.trace)->required()->check(CLI::ExistingFile);
  agent->add_option("--profile", ag.profile)
      ->check(CLI::IsMember({"always_on", "depot", "pilot"}))
      ->capture_default_str();
  agent->add_option("--server", ag.server)->capture_default_str();
  agent->add_option("--batch-cap", ag.batch_cap)->check(CLI::PositiveNumber)->capture_default_str();
  agent->add_option("--spool-dir", ag.spool_dir)->capture_default_str();

  cli::ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the ingestion server");
  serve->add_option("--listen", sv.listen, "host:port, port 0 picks a free one")
      ->envname("PODAS_LISTEN")
      ->capture_default_str();
  serve->add_option("--data-dir", sv.data_dir)->envname("PODAS_DATA_DIR")->capture_default_str();
  serve->add_option("--thresholds", sv.thresholds, "Thresholds installed on first start")
      ->envname("PODAS_THRESHOLDS")
      ->check(CLI::ExistingFile);
  serve->add_option("--ui-dir", sv.ui_dir, "Dashboard bundle served under /ui/")
      ->envname("PODAS_UI_DIR")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--cluster-radius-m", sv.cluster_radius_m)->capture_default_str();

  cli::EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score detected events against ground truth");
  evaluate->add_option("--events", ev.events)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", ev.truth, "Truth points or a road profile")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--radius", ev.radius_m, "Match radius in meters")->capture_default_str();
  evaluate->add_flag("--json", ev.json);

  cli::ExportArgs ex;
  auto* exporter = app.add_subcommand("export", "Export stored events");
  exporter->add_option("--data-dir", ex.data_dir, "Read a server data directory");
  exporter->add_option("--server", ex.server, "Query a running server");
  exporter->add_option("--format", ex.format)
      ->check(CLI::IsMember({"geojson", "json"}))
      ->capture_default_str();
  exporter->add_option("--out", ex.out);
  exporter->add_option("--bbox", ex.bbox, "min_lon,min_lat,max_lon,max_lat");
  exporter->add_option("--since-ms", ex.since_ms);
  exporter->add_option("--min-severity", ex.min_severity);

  cli::DemoArgs dm;
  auto* demo = app.add_subcommand("demo", "Run a scenario end to end and score it");
  demo->add_option("scenario", dm.scenario)->required()->check(CLI::ExistingFile);
  demo->add_option("--seed", dm.seed, "Override the scenario seed");
  demo->add_flag("--json", dm.json, "Machine-readable report");
  demo->add_option("--out-geojson", dm.out_geojson);
  demo->add_option("--transport", dm.transport, "http (loopback) or local")
      ->check(CLI::IsMember({"http", "local"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*simulate) return cli::cmd_simulate(sim, std::cout);
    if (*calibrate) return cli::cmd_calibrate(cal, std::cout);
    if (*agent) return cli::cmd_agent(ag, std::cout);
    if (*serve) return cli::cmd_serve(sv, std::cout);
    if (*evaluate) return cli::cmd_evaluate(ev, std::cout);
    if (*exporter) return cli::cmd_export(ex, std::cout);
    if (*demo) return cli::cmd_demo(dm, std::cout, std::cerr);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitFailure;
  }
  return cli::kExitUsage;
}
