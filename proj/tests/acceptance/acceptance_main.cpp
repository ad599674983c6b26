// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Tolerances are fixed here and printed with each result.

#include <httplib.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "podas/agent/agent.hpp"
#include "podas/cli/demo.hpp"
#include "podas/cli/scenario.hpp"
#include "podas/roadsim.hpp"
#include "podas/server/ingest_service.hpp"
#include "test_support.hpp"

extern char** environ;

namespace {

using namespace podas;
using testing::Gen;
using testing::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Recall on the 1 km scenario

constexpr std::uint64_t kFirstSeed = 42;
constexpr std::size_t kSeeds = 20;
constexpr std::size_t kSeedsRequired = 18;
constexpr double kRecallFloor = 0.80;
constexpr double kRecallBandLo = 0.72;
constexpr double kMaxSecondsPerSeed = 10.0;

Outcome scenario_recall() {
  const auto scenario = cli::read_scenario(testing::source_dir() / "scenarios" / "paper-1km.json");
  std::size_t at_floor = 0;
  std::size_t in_band = 0;
  double lo = 1.0, hi = 0.0, slowest = 0.0;
  std::ostringstream per_seed;
  for (std::size_t i = 0; i < kSeeds; ++i) {
    const auto seed = kFirstSeed + i;
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = cli::run_demo(scenario, {seed, cli::DemoTransport::Http});
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    const double recall = report.metrics.recall.value_or(-1.0);
    lo = std::min(lo, recall);
    hi = std::max(hi, recall);
    if (recall >= kRecallFloor) ++at_floor;
    if (recall >= kRecallBandLo && recall <= 1.0) ++in_band;
    per_seed << (i ? " " : "") << recall;
  }
  std::ostringstream d;
  d << at_floor << "/" << kSeeds << " seeds >= " << kRecallFloor << " (need " << kSeedsRequired
    << "), " << in_band << "/" << kSeeds << " in [" << kRecallBandLo << ", 1], range [" << lo
    << ", " << hi << "], slowest " << slowest << " s (limit " << kMaxSecondsPerSeed
    << " s); per seed: " << per_seed.str();
  return {at_floor >= kSeedsRequired && in_band == kSeeds && slowest < kMaxSecondsPerSeed,
          d.str()};
}

// ---------------------------------------------------------------------------
// Calibration constants

Outcome calibration_constants() {
  constexpr double kTol = 1e-9;
  roadsim::ProfileParams params;
  params.length_m = 500.0;
  params.n_potholes = 0;
  const auto road = roadsim::generate_profile(params);
  roadsim::VehicleConfig vehicle;
  vehicle.ride_height_in = 6.0;
  const auto trace =
      roadsim::sample_trace(road, vehicle, roadsim::NoiseModel::zero(), "ref", 0, 7);
  const auto t = detection::calibrate(trace);
  const double e_base = std::abs(t.ultrasonic_base_in - 6.0);
  const double e_cut = std::abs(t.severe_cutoff_in - 10.0);
  std::ostringstream d;
  d.precision(17);
  d << trace.size() << " readings: base " << t.ultrasonic_base_in << " in, cutoff "
    << t.severe_cutoff_in << " in (tolerance 1e-9)";
  return {e_base <= kTol && e_cut <= kTol, d.str()};
}

// ---------------------------------------------------------------------------
// Store-and-forward conservation with a forced crash-restart per run

struct SimulatedCrash {};

// Commits the Nth batch on the server, then "crashes" before the agent sees
// the acknowledgment.
class CrashingTransport final : public Transport {
 public:
  CrashingTransport(server::IngestService& s, std::size_t crash_on)
      : inner_(s), crash_on_(crash_on) {}
  DeliveryResult deliver(const ReadingBatch& batch) override {
    auto r = inner_.deliver(batch);
    if (r.status == DeliveryResult::Status::Acked && ++acked_ == crash_on_ && !crashed) {
      crashed = true;
      throw SimulatedCrash{};
    }
    return r;
  }
  bool crashed = false;

 private:
  server::LocalTransport inner_;
  std::size_t acked_ = 0;
  std::size_t crash_on_;
};

// Counts how often each (node_id, seq) appears across the committed batches.
std::map<ReadingKey, int> commit_log_keys(const std::filesystem::path& data_dir) {
  std::map<ReadingKey, int> seen;
  for (const auto& rec : parse_lines(read_file(data_dir / "commit.log"))) {
    if (rec.at("type") != "batch") continue;
    const auto node = rec.at("node_id").get<std::string>();
    for (const auto& r : rec.at("readings")) ++seen[{node, r.at("seq").get<std::int64_t>()}];
  }
  return seen;
}

std::vector<SensorReading> drive(std::uint64_t seed, const std::string& node) {
  roadsim::ProfileParams params;
  params.seed = seed;
  const auto road = roadsim::generate_profile(params);
  return roadsim::sample_trace(road, {}, {}, node, 1'700'000'000'000, seed + 1);
}

struct ConservationRun {
  bool crashed = false;
  bool conserved = false;
  std::size_t server_rows = 0;
  std::size_t trace_len = 0;
  std::size_t duplicate_keys = 0;
  std::size_t missing_keys = 0;
};

ConservationRun conservation_run(std::uint64_t seed) {
  TempDir dir;
  Gen gen(seed * 7919);
  const auto trace = drive(seed, "bus-01");
  server::IngestService service({dir / "server", {}, 5.0, false});

  agent::AgentConfig cfg;
  cfg.node_id = "bus-01";
  cfg.spool_dir = dir / "spool";
  cfg.fsync = false;
  cfg.batch_cap = static_cast<std::size_t>(gen.integer(5, 60));
  const auto start = trace.front().ts_ms;
  const auto schedule =
      agent::ConnectivitySchedule::random_churn(seed, start, trace.back().ts_ms + 600'000);
  agent::SimulatedClock clock(start);

  // At least ceil(150 / 60) = 3 batches are acknowledged, so the crash fires.
  CrashingTransport first(service, static_cast<std::size_t>(gen.integer(1, 3)));
  std::size_t enqueued_before = 0;
  try {
    agent::Agent node(cfg, first, clock);
    node.run_session(trace, schedule);
  } catch (const SimulatedCrash&) {
  }
  // Readings up to the crash instant were already handed to the node.
  for (const auto& r : trace) enqueued_before += r.ts_ms <= clock.now_ms() ? 1 : 0;

  server::LocalTransport second(service);
  agent::Agent node(cfg, second, clock);
  const std::span rest(trace.data() + enqueued_before, trace.size() - enqueued_before);
  const auto after = node.run_session(rest, schedule);

  ConservationRun run;
  run.crashed = first.crashed;
  run.conserved = after.conserved() && after.remaining == 0;
  run.server_rows = service.reading_count();
  run.trace_len = trace.size();
  const auto keys = commit_log_keys(dir / "server");
  for (const auto& r : trace) {
    const auto it = keys.find(key_of(r));
    if (it == keys.end()) {
      ++run.missing_keys;
    } else if (it->second != 1) {
      ++run.duplicate_keys;
    }
  }
  return run;
}

Outcome store_and_forward() {
  constexpr std::uint64_t kRuns = 100;
  std::size_t ok = 0, crashes = 0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= kRuns; ++seed) {
    const auto r = conservation_run(seed);
    crashes += r.crashed ? 1 : 0;
    const bool good = r.crashed && r.conserved && r.server_rows == r.trace_len &&
                      r.duplicate_keys == 0 && r.missing_keys == 0;
    if (good) {
      ++ok;
    } else if (first_failure.empty()) {
      std::ostringstream d;
      d << "; first failure seed " << seed << ": rows " << r.server_rows << "/" << r.trace_len
        << ", duplicates " << r.duplicate_keys << ", missing " << r.missing_keys
        << ", crashed " << r.crashed;
      first_failure = d.str();
    }
  }
  std::ostringstream d;
  d << ok << "/" << kRuns << " churn schedules with rows == trace length and 0 duplicate keys, "
    << crashes << " forced crash-restarts (exact)" << first_failure;
  return {ok == kRuns, d.str()};
}

// ---------------------------------------------------------------------------
// Ingest idempotency

class RecordingTransport final : public Transport {
 public:
  explicit RecordingTransport(server::IngestService& s) : inner_(s) {}
  DeliveryResult deliver(const ReadingBatch& batch) override {
    auto r = inner_.deliver(batch);
    if (r.status == DeliveryResult::Status::Acked) batches.push_back(batch);
    return r;
  }
  std::vector<ReadingBatch> batches;

 private:
  server::LocalTransport inner_;
};

Outcome ingest_idempotency() {
  constexpr std::uint64_t kSessions = 20;
  std::size_t ok = 0;
  for (std::uint64_t seed = 1; seed <= kSessions; ++seed) {
    TempDir dir;
    const auto trace = drive(seed + 1000, "bus-" + std::to_string(seed));
    server::IngestService once({dir / "once", {}, 5.0, false});
    RecordingTransport rec(once);
    agent::AgentConfig cfg;
    cfg.node_id = trace.front().node_id;
    cfg.spool_dir = dir / "spool";
    cfg.fsync = false;
    cfg.batch_cap = 10 + seed;
    agent::SimulatedClock clock(trace.front().ts_ms);
    agent::Agent node(cfg, rec, clock);
    node.run_session(trace, agent::ConnectivitySchedule::random_churn(
                                seed, trace.front().ts_ms, trace.back().ts_ms + 60'000));

    // Back to back, and again as a full second pass of the session.
    server::IngestService twice_each({dir / "twice_each", {}, 5.0, false});
    server::IngestService replayed({dir / "replayed", {}, 5.0, false});
    std::size_t second_accepts = 0;
    for (const auto& b : rec.batches) {
      twice_each.ingest_batch(b);
      second_accepts += twice_each.ingest_batch(b).accepted;
      replayed.ingest_batch(b);
    }
    for (const auto& b : rec.batches) second_accepts += replayed.ingest_batch(b).accepted;

    const bool same = second_accepts == 0 &&
                      twice_each.reading_state_hash() == once.reading_state_hash() &&
                      twice_each.event_state_hash() == once.event_state_hash() &&
                      replayed.reading_state_hash() == once.reading_state_hash() &&
                      replayed.event_state_hash() == once.event_state_hash();
    ok += same ? 1 : 0;
  }
  std::ostringstream d;
  d << ok << "/" << kSessions
    << " sessions: reading and event state hashes after double delivery equal single delivery"
       " (exact)";
  return {ok == kSessions, d.str()};
}

// ---------------------------------------------------------------------------
// Oracle equivalence

Outcome oracle_equivalence() {
  constexpr std::size_t kTraces = 50;
  constexpr double kCentroidTolDeg = 1e-9;
  std::size_t ok = 0;
  std::size_t total_events = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= kTraces; ++seed) {
    TempDir dir;
    Gen gen(seed + 5000);
    const auto n = static_cast<std::size_t>(gen.integer(1, 200));
    const auto trace = gen.trace(n, "bus-01", {13.35, 74.78}, gen.uniform(5.0, 300.0));

    server::IngestService service({dir.path(), {}, 5.0, false});
    std::size_t i = 0;
    std::int64_t batch_seq = 0;
    while (i < trace.size()) {
      const auto k = std::min<std::size_t>(trace.size() - i, gen.integer(1, 40));
      service.ingest_batch({"bus-01", batch_seq++, {trace.begin() + static_cast<long>(i),
                                                    trace.begin() + static_cast<long>(i + k)}});
      i += k;
    }
    const auto events = service.get_potholes();
    const auto expected = testing::oracle_events(trace, {}, 5.0);

    std::map<std::set<ReadingKey>, GeoPoint> want;
    for (const auto& ev : expected) {
      want[{ev.members.begin(), ev.members.end()}] = ev.centroid;
    }
    bool same = events.size() == expected.size();
    for (const auto& ev : events) {
      std::set<ReadingKey> members;
      for (const auto& m : ev.members) members.insert({m.node_id, m.seq});
      const auto it = want.find(members);
      if (it == want.end()) {
        same = false;
        continue;
      }
      const double err = std::max(std::abs(ev.centroid.lat - it->second.lat),
                                  std::abs(ev.centroid.lon - it->second.lon));
      worst = std::max(worst, err);
      same = same && err <= kCentroidTolDeg;
    }
    total_events += events.size();
    ok += same ? 1 : 0;
  }
  std::ostringstream d;
  d << ok << "/" << kTraces << " random traces (<= 200 points, " << total_events
    << " events) match the brute-force oracle; worst centroid error " << worst
    << " deg (tolerance 1e-9)";
  return {ok == kTraces, d.str()};
}

// ---------------------------------------------------------------------------
// Classification truth table

Outcome truth_table() {
  const std::vector<detection::Thresholds> sets{
      {6.0, 10.0, 1150.0, {}}, {7.27, 11.27, 1115.5, {}}, {0.5, 0.75, 1.0, {}}};
  std::size_t cases = 0, mismatches = 0;
  std::set<std::tuple<int, int>> labels_seen;
  for (const auto& t : sets) {
    const double eu = 1e-9 * std::max(1.0, t.severe_cutoff_in);
    const double ea = 1e-9 * std::max(1.0, t.accel_z_threshold);
    const std::vector<double> ds{0.0,
                                 t.ultrasonic_base_in - eu,
                                 t.ultrasonic_base_in,
                                 t.ultrasonic_base_in + eu,
                                 (t.ultrasonic_base_in + t.severe_cutoff_in) / 2,
                                 t.severe_cutoff_in - eu,
                                 t.severe_cutoff_in,
                                 t.severe_cutoff_in + eu,
                                 t.severe_cutoff_in * 4};
    const std::vector<double> as{0.0, t.accel_z_threshold - ea, t.accel_z_threshold,
                                 t.accel_z_threshold + ea, t.accel_z_threshold * 4};
    for (double d : ds) {
      for (double a : as) {
        ++cases;
        const SensorReading r{"n", 0, 0, {0, 0}, d, a};
        const auto got = detection::classify_point(r, t);
        const auto want = testing::oracle_label(d, a, t);
        if (got.severity != want.severity || got.confidence != want.confidence) ++mismatches;
        labels_seen.insert({static_cast<int>(got.severity), static_cast<int>(got.confidence)});
      }
    }
  }
  std::ostringstream d;
  d << cases << " boundary combinations over 3 threshold sets, " << mismatches
    << " label mismatches, " << labels_seen.size() << " distinct labels produced (exact)";
  // Normal/Low, Maintenance/Low, Pothole/Low and Pothole/High all occur.
  return {mismatches == 0 && labels_seen.size() == 4, d.str()};
}

// ---------------------------------------------------------------------------
// GeoJSON validity

Outcome geojson_validity() {
  std::ostringstream d;
  bool all = true;
  for (int n : {0, 1, 20}) {
    TempDir dir;
    server::IngestService service({dir.path(), {}, 5.0, false});
    if (n > 0) {
      std::vector<SensorReading> rs;
      GeoPoint p{13.35, 74.78};
      for (int i = 0; i < n; ++i) {
        rs.push_back({"bus-01", i, 1'700'000'000'000 + i * 1000, p, 12.0, 1200.0});
        p = displace(p, 90.0, 25.0);
      }
      service.ingest_batch({"bus-01", 0, rs});
    }
    const auto doc = json::parse(service.export_geojson().dump());
    const auto errors = testing::validate_geojson(doc);
    const auto features = doc.value("features", json::array()).size();
    const bool good = errors.empty() && features == static_cast<std::size_t>(n);
    all = all && good;
    d << (n ? ", " : "") << n << "-event store: " << features << " features, " << errors.size()
      << " violations";
    if (!errors.empty()) d << " (" << errors.front() << ")";
  }
  return {all, d.str()};
}

// ---------------------------------------------------------------------------
// Crash consistency of the server process

class ServerProcess {
 public:
  explicit ServerProcess(const std::filesystem::path& data_dir) {
    int fds[2];
    if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    const auto exe = testing::cli_path();
    const auto dir = data_dir.string();
    std::vector<std::string> args{exe, "serve", "--listen", "127.0.0.1:0", "--data-dir", dir};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    const int rc = posix_spawn(&pid_, exe.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(fds[1]);
    if (rc != 0) {
      close(fds[0]);
      throw std::runtime_error("cannot start " + exe);
    }
    out_ = fdopen(fds[0], "r");
    char line[512];
    while (std::fgets(line, sizeof line, out_)) {
      const std::string text(line);
      const auto at = text.find("listening on 127.0.0.1:");
      if (at == std::string::npos) continue;
      port_ = std::stoi(text.substr(at + std::string("listening on 127.0.0.1:").size()));
      return;
    }
    kill_hard();
    throw std::runtime_error("server exited before listening");
  }
  ~ServerProcess() {
    kill_hard();
    if (out_) std::fclose(out_);
  }

  int port() const noexcept { return port_; }

  void kill_hard() {
    if (pid_ <= 0) return;
    ::kill(pid_, SIGKILL);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }

 private:
  pid_t pid_ = -1;
  FILE* out_ = nullptr;
  int port_ = 0;
};

std::map<std::string, std::string> snapshot(httplib::Client& client) {
  std::map<std::string, std::string> out;
  for (const char* path :
       {"/api/v1/potholes", "/api/v1/potholes.geojson", "/api/v1/stats?bucket=day",
        "/api/v1/stats?bucket=hour", "/api/v1/thresholds", "/api/v1/version"}) {
    const auto res = client.Get(path);
    out[path] = res ? std::to_string(res->status) + " " + res->body : "unreachable";
  }
  return out;
}

Outcome crash_consistency() {
  std::ostringstream d;
  bool all = true;
  for (std::size_t n_batches : {1, 3, 8}) {
    TempDir dir;
    std::map<std::string, std::string> before, after;
    std::size_t committed = 0;
    {
      ServerProcess server(dir / "data");
      httplib::Client client("127.0.0.1", server.port());
      Gen gen(n_batches);
      const auto trace = gen.trace(n_batches * 25, "bus-01", {13.35, 74.78}, 200.0);
      for (std::size_t b = 0; b < n_batches; ++b) {
        ReadingBatch batch{"bus-01", static_cast<std::int64_t>(b),
                           {trace.begin() + static_cast<long>(b * 25),
                            trace.begin() + static_cast<long>((b + 1) * 25)}};
        const auto res = client.Post("/api/v1/readings", json(batch).dump(), "application/json");
        if (res && res->status == 200) ++committed;
      }
      before = snapshot(client);
      server.kill_hard();
    }
    ServerProcess restarted(dir / "data");
    httplib::Client client("127.0.0.1", restarted.port());
    after = snapshot(client);
    const bool same = committed == n_batches && before == after &&
                      before["/api/v1/potholes"].rfind("200 ", 0) == 0;
    all = all && same;
    d << (d.tellp() > 0 ? ", " : "") << committed << " batches: "
      << (same ? "identical" : "DIFFERENT");
  }
  d << " (potholes, geojson, day/hour stats, thresholds, version compared byte for byte after"
       " SIGKILL and restart)";
  return {all, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scenario-recall", scenario_recall},
      {"calibration-constants", calibration_constants},
      {"store-and-forward-conservation", store_and_forward},
      {"ingest-idempotency", ingest_idempotency},
      {"oracle-equivalence", oracle_equivalence},
      {"classification-truth-table", truth_table},
      {"geojson-validity", geojson_validity},
      {"crash-consistency", crash_consistency},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
