#include "podas/agent/connectivity.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "podas/domain.hpp"

namespace podas::agent {

std::string_view to_string(ConnectivityProfile p) noexcept {
  switch (p) {
    case ConnectivityProfile::AlwaysOn: return "always_on";
    case ConnectivityProfile::AlwaysDown: return "always_down";
    case ConnectivityProfile::Depot: return "depot";
    case ConnectivityProfile::Pilot: return "pilot";
    case ConnectivityProfile::Custom: return "custom";
  }
  return "custom";
}

std::optional<ConnectivityProfile> parse_profile(std::string_view name) noexcept {
  if (name == "always_on") return ConnectivityProfile::AlwaysOn;
  if (name == "always_down") return ConnectivityProfile::AlwaysDown;
  if (name == "depot") return ConnectivityProfile::Depot;
  if (name == "pilot") return ConnectivityProfile::Pilot;
  return std::nullopt;
}

ConnectivitySchedule::ConnectivitySchedule(ConnectivityProfile profile,
                                           std::vector<UpWindow> windows)
    : profile_(profile), windows_(std::move(windows)) {
  for (std::size_t i = 0; i < windows_.size(); ++i) {
    if (windows_[i].start_ms >= windows_[i].end_ms) {
      throw ValidationError("connectivity window must have start < end");
    }
    if (i > 0 && windows_[i].start_ms < windows_[i - 1].end_ms) {
      throw ValidationError("connectivity windows must be sorted and disjoint");
    }
  }
}

ConnectivitySchedule ConnectivitySchedule::always_on() {
  return {ConnectivityProfile::AlwaysOn, {{std::numeric_limits<std::int64_t>::min(), kForever}}};
}

ConnectivitySchedule ConnectivitySchedule::always_down() {
  return {ConnectivityProfile::AlwaysDown, {}};
}

ConnectivitySchedule ConnectivitySchedule::depot(std::int64_t drive_end_ms,
                                                 std::int64_t arrival_delay_ms) {
  const auto opens = drive_end_ms + std::max<std::int64_t>(arrival_delay_ms, 1);
  return {ConnectivityProfile::Depot, {{opens, kForever}}};
}

ConnectivitySchedule ConnectivitySchedule::pilot(std::int64_t drive_start_ms,
                                                 std::int64_t drive_end_ms,
                                                 std::int64_t period_ms, std::int64_t up_ms) {
  if (period_ms <= 0 || up_ms <= 0 || up_ms >= period_ms) {
    throw ValidationError("pilot schedule needs 0 < up_ms < period_ms");
  }
  std::vector<UpWindow> windows;
  std::int64_t t = drive_start_ms + period_ms - up_ms;
  for (; t + up_ms <= drive_end_ms; t += period_ms) windows.push_back({t, t + up_ms});
  windows.push_back({std::max(t, drive_end_ms + 1), kForever});
  return {ConnectivityProfile::Pilot, std::move(windows)};
}

ConnectivitySchedule ConnectivitySchedule::random_churn(std::uint64_t seed, std::int64_t start_ms,
                                                        std::int64_t end_ms,
                                                        std::size_t n_windows) {
  if (n_windows == 0 || end_ms <= start_ms) {
    throw ValidationError("random churn needs at least one window and end > start");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(start_ms, end_ms);
  // 2n - 1 distinct cut points: n starts, n - 1 finite ends.
  std::set<std::int64_t> cuts;
  const auto wanted = static_cast<std::size_t>(2 * n_windows - 1);
  const auto span = static_cast<std::uint64_t>(end_ms - start_ms) + 1;
  if (span < wanted) throw ValidationError("time span too short for the requested windows");
  while (cuts.size() < wanted) cuts.insert(pick(rng));

  std::vector<std::int64_t> c(cuts.begin(), cuts.end());
  std::vector<UpWindow> windows;
  for (std::size_t i = 0; i + 1 < c.size(); i += 2) windows.push_back({c[i], c[i + 1]});
  windows.push_back({c.back(), kForever});
  return {ConnectivityProfile::Custom, std::move(windows)};
}

ConnectivitySchedule ConnectivitySchedule::named(ConnectivityProfile profile,
                                                 std::int64_t drive_start_ms,
                                                 std::int64_t drive_end_ms) {
  switch (profile) {
    case ConnectivityProfile::AlwaysOn: return always_on();
    case ConnectivityProfile::AlwaysDown: return always_down();
    case ConnectivityProfile::Depot: return depot(drive_end_ms);
    case ConnectivityProfile::Pilot: return pilot(drive_start_ms, drive_end_ms);
    case ConnectivityProfile::Custom: break;
  }
  throw ValidationError("custom schedules need explicit windows");
}

const UpWindow* ConnectivitySchedule::window_at_or_after(std::int64_t t_ms) const noexcept {
  // First window whose end lies after t.
  auto it = std::upper_bound(windows_.begin(), windows_.end(), t_ms,
                             [](std::int64_t t, const UpWindow& w) { return t < w.end_ms; });
  return it == windows_.end() ? nullptr : &*it;
}

bool ConnectivitySchedule::is_up(std::int64_t t_ms) const noexcept {
  const auto* w = window_at_or_after(t_ms);
  return w && w->start_ms <= t_ms;
}

std::optional<std::int64_t> ConnectivitySchedule::next_up(std::int64_t t_ms) const noexcept {
  const auto* w = window_at_or_after(t_ms);
  if (!w) return std::nullopt;
  return std::max(w->start_ms, t_ms);
}

std::int64_t ConnectivitySchedule::window_end(std::int64_t t_ms) const noexcept {
  const auto* w = window_at_or_after(t_ms);
  return w ? w->end_ms : t_ms;
}

}  // namespace podas::agent
