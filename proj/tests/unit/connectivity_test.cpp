#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "podas/agent/connectivity.hpp"
#include "podas/domain.hpp"

namespace podas::agent {
namespace {

TEST(Connectivity, AlwaysOnAndAlwaysDown) {
  const auto on = ConnectivitySchedule::always_on();
  const auto down = ConnectivitySchedule::always_down();
  for (std::int64_t t : {std::int64_t{-5}, std::int64_t{0}, std::int64_t{1'700'000'000'000}}) {
    EXPECT_TRUE(on.is_up(t));
    EXPECT_EQ(on.next_up(t), t);
    EXPECT_FALSE(down.is_up(t));
    EXPECT_FALSE(down.next_up(t).has_value());
  }
}

TEST(Connectivity, WindowsAreHalfOpen) {
  const ConnectivitySchedule s(ConnectivityProfile::Custom, {{10, 20}, {30, 40}});
  EXPECT_FALSE(s.is_up(9));
  EXPECT_TRUE(s.is_up(10));
  EXPECT_TRUE(s.is_up(19));
  EXPECT_FALSE(s.is_up(20));
  EXPECT_EQ(s.next_up(20), 30);
  EXPECT_EQ(s.next_up(15), 15);
  EXPECT_FALSE(s.next_up(40).has_value());
  EXPECT_EQ(s.window_end(12), 20);
}

TEST(Connectivity, RejectsOverlappingOrUnsortedWindows) {
  EXPECT_THROW(ConnectivitySchedule(ConnectivityProfile::Custom, {{10, 20}, {15, 30}}),
               ValidationError);
  EXPECT_THROW(ConnectivitySchedule(ConnectivityProfile::Custom, {{30, 40}, {10, 20}}),
               ValidationError);
  EXPECT_THROW(ConnectivitySchedule(ConnectivityProfile::Custom, {{10, 10}}), ValidationError);
  EXPECT_NO_THROW(ConnectivitySchedule(ConnectivityProfile::Custom, {{10, 20}, {20, 30}}));
}

TEST(Connectivity, DepotOpensOnlyAfterTheDrive) {
  const auto s = ConnectivitySchedule::depot(1000);
  EXPECT_FALSE(s.is_up(0));
  EXPECT_FALSE(s.is_up(1000));
  EXPECT_TRUE(s.is_up(1000 + 60'000));
  EXPECT_EQ(s.window_end(2'000'000), kForever);
}

TEST(Connectivity, PilotHasPeriodicWindowsAndAFinalOpenOne) {
  const auto s = ConnectivitySchedule::pilot(0, 600'000);
  const auto& w = s.windows();
  ASSERT_GE(w.size(), 2u);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) EXPECT_EQ(w[i].end_ms - w[i].start_ms, 20'000);
  EXPECT_EQ(w.back().end_ms, kForever);
  EXPECT_GT(w.back().start_ms, 600'000 - 1);
}

TEST(Connectivity, RandomChurnIsSeededSortedAndEndsOpen) {
  const auto a = ConnectivitySchedule::random_churn(7, 0, 1'000'000);
  const auto b = ConnectivitySchedule::random_churn(7, 0, 1'000'000);
  const auto c = ConnectivitySchedule::random_churn(8, 0, 1'000'000);
  EXPECT_EQ(a.windows(), b.windows());
  EXPECT_NE(a.windows(), c.windows());
  EXPECT_EQ(a.windows().size(), 20u);
  EXPECT_EQ(a.windows().back().end_ms, kForever);
}

TEST(Connectivity, ProfileNames) {
  for (auto p : {ConnectivityProfile::AlwaysOn, ConnectivityProfile::AlwaysDown,
                 ConnectivityProfile::Depot, ConnectivityProfile::Pilot}) {
    EXPECT_EQ(parse_profile(to_string(p)), p);
  }
  EXPECT_FALSE(parse_profile("sometimes").has_value());
  EXPECT_THROW(ConnectivitySchedule::named(ConnectivityProfile::Custom, 0, 1), ValidationError);
}

}  // namespace
}  // namespace podas::agent
