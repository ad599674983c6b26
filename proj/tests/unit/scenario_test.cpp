#include <gtest/gtest.h>

#include "podas/cli/demo.hpp"
#include "podas/cli/scenario.hpp"
#include "test_support.hpp"

namespace podas::cli {
namespace {

TEST(Scenario, EmptyDocumentGivesDefaults) {
  const auto s = scenario_from_json(json::object());
  EXPECT_EQ(s.seed, 42u);
  EXPECT_EQ(s.road.seed, 42u);
  EXPECT_EQ(s.road.n_potholes, 25u);
  EXPECT_EQ(s.node_id, "bus-01");
  EXPECT_EQ(s.connectivity, agent::ConnectivityProfile::Depot);
  EXPECT_EQ(s.batch_cap, 50u);
  EXPECT_FALSE(s.thresholds);
  EXPECT_EQ(s.trace_seed(), 43u);
  EXPECT_EQ(s.calibration_seed(), 44u);
}

TEST(Scenario, ShippedOneKilometreScenarioParses) {
  const auto s = read_scenario(testing::source_dir() / "scenarios" / "paper-1km.json");
  EXPECT_EQ(s.name, "paper-1km");
  EXPECT_DOUBLE_EQ(s.road.length_m, 1000.0);
  EXPECT_EQ(s.road.n_potholes, 25u);
  EXPECT_DOUBLE_EQ(s.road.depth_range_in.min, 3.0);
  EXPECT_DOUBLE_EQ(s.road.depth_range_in.max, 8.0);
  EXPECT_DOUBLE_EQ(s.vehicle.sample_spacing_m, 1000.0 / 150.0);
  EXPECT_DOUBLE_EQ(s.calibration.length_m, 500.0);
  EXPECT_DOUBLE_EQ(s.calibration.options.k_sigma, 5.0);
  EXPECT_DOUBLE_EQ(s.match_radius_m, 10.0);
  EXPECT_DOUBLE_EQ(s.recall_floor, 0.8);
}

TEST(Scenario, RoundTripsThroughJson) {
  auto s = scenario_from_json(json::object());
  s.name = "rt";
  s.seed = 9;
  s.road.seed = 9;
  s.road.n_potholes = 3;
  s.connectivity = agent::ConnectivityProfile::Pilot;
  s.thresholds = detection::Thresholds{5.5, 9.5, 1000.0, {}};
  s.calibration.zero_noise = true;
  const auto back = scenario_from_json(scenario_to_json(s));
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(s));
  EXPECT_EQ(back.thresholds, s.thresholds);
}

TEST(Scenario, InvalidFieldsAreRejected) {
  EXPECT_THROW(scenario_from_json({{"node", {{"connectivity", "sometimes"}}}}), ValidationError);
  EXPECT_THROW(scenario_from_json({{"node", {{"batch_cap", 0}}}}), ValidationError);
  EXPECT_THROW(scenario_from_json({{"road", {{"depth_range_in", {1}}}}}), ValidationError);
  EXPECT_THROW(scenario_from_json({{"detection", {{"recall_floor", 1.5}}}}), ValidationError);
  EXPECT_THROW(scenario_from_json({{"detection", {{"match_radius_m", 0}}}}), ValidationError);
  EXPECT_THROW(scenario_from_json({{"thresholds", {{"ultrasonic_base_in", 9},
                                                   {"severe_cutoff_in", 8},
                                                   {"accel_z_threshold", 1}}}}),
               ValidationError);
  EXPECT_THROW(scenario_from_json({{"seed", "x"}}), json::exception);
}

TEST(Scenario, UnreadableFilesNameThePath) {
  testing::TempDir dir;
  testing::write_text(dir / "bad.json", "{\"seed\": ");
  try {
    read_scenario(dir / "bad.json");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
}

TEST(ReferenceThresholds, ZeroNoiseCalibrationGivesTheNominalBaseline) {
  auto s = scenario_from_json(json::object());
  s.calibration.zero_noise = true;
  const auto t = reference_thresholds(s);
  EXPECT_NEAR(t.ultrasonic_base_in, 6.0, 1e-9);
  EXPECT_NEAR(t.severe_cutoff_in, 10.0, 1e-9);
  EXPECT_NEAR(t.accel_z_threshold, 950.0, 1e-9);
}

TEST(Demo, FixedThresholdsSkipCalibration) {
  auto s = scenario_from_json(json::object());
  s.thresholds = detection::Thresholds{5.0, 9.0, 900.0, {}};
  const auto report = run_demo(s, {std::nullopt, DemoTransport::Local});
  EXPECT_EQ(report.thresholds, *s.thresholds);
}

TEST(Demo, LocalAndHttpTransportsAgree) {
  const auto s = read_scenario(testing::source_dir() / "scenarios" / "paper-1km.json");
  const auto local = run_demo(s, {std::nullopt, DemoTransport::Local});
  const auto http = run_demo(s, {std::nullopt, DemoTransport::Http});
  EXPECT_EQ(local.events, http.events);
  EXPECT_EQ(local.metrics.matched, http.metrics.matched);
  EXPECT_EQ(local.session.acked, 150u);
  EXPECT_TRUE(local.passed());
  const auto text = format_report(local);
  EXPECT_NE(text.find("result     PASS"), std::string::npos);
  EXPECT_EQ(report_to_json(local)["seed"], 42);
}

TEST(Demo, SeedOverrideChangesTheRoad) {
  const auto s = read_scenario(testing::source_dir() / "scenarios" / "paper-1km.json");
  const auto a = run_demo(s, {42, DemoTransport::Local});
  const auto b = run_demo(s, {43, DemoTransport::Local});
  EXPECT_EQ(b.seed, 43u);
  EXPECT_NE(a.events, b.events);
}

}  // namespace
}  // namespace podas::cli
