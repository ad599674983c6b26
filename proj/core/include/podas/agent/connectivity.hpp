#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace podas::agent {

inline constexpr std::int64_t kForever = std::numeric_limits<std::int64_t>::max();

/// Half-open up-window [start_ms, end_ms).
struct UpWindow {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = kForever;

  friend bool operator==(const UpWindow&, const UpWindow&) = default;
};

enum class ConnectivityProfile { AlwaysOn, AlwaysDown, Depot, Pilot, Custom };

std::string_view to_string(ConnectivityProfile p) noexcept;
/// Accepts "always_on", "depot" and "pilot".
std::optional<ConnectivityProfile> parse_profile(std::string_view name) noexcept;

/// When the uplink is available. Windows are sorted and pairwise disjoint.
class ConnectivitySchedule {
 public:
  /// Throws ValidationError if the windows overlap or are unsorted.
  ConnectivitySchedule(ConnectivityProfile profile, std::vector<UpWindow> windows);

  static ConnectivitySchedule always_on();
  static ConnectivitySchedule always_down();
  /// Offline for the whole drive; connects `arrival_delay_ms` after it ends
  /// and stays connected.
  static ConnectivitySchedule depot(std::int64_t drive_end_ms,
                                    std::int64_t arrival_delay_ms = 60'000);
  /// Short windows every `period_ms` during the drive, then a final open window.
  static ConnectivitySchedule pilot(std::int64_t drive_start_ms, std::int64_t drive_end_ms,
                                    std::int64_t period_ms = 120'000,
                                    std::int64_t up_ms = 20'000);
  /// `n_windows` random windows over [start, end], the last one open-ended.
  static ConnectivitySchedule random_churn(std::uint64_t seed, std::int64_t start_ms,
                                           std::int64_t end_ms, std::size_t n_windows = 20);
  /// Named schedule for a drive spanning [drive_start_ms, drive_end_ms].
  static ConnectivitySchedule named(ConnectivityProfile profile, std::int64_t drive_start_ms,
                                    std::int64_t drive_end_ms);

  bool is_up(std::int64_t t_ms) const noexcept;
  /// Earliest time >= t_ms at which the link is up.
  std::optional<std::int64_t> next_up(std::int64_t t_ms) const noexcept;
  /// End of the window containing t_ms; requires is_up(t_ms).
  std::int64_t window_end(std::int64_t t_ms) const noexcept;

  ConnectivityProfile profile() const noexcept { return profile_; }
  const std::vector<UpWindow>& windows() const noexcept { return windows_; }

 private:
  const UpWindow* window_at_or_after(std::int64_t t_ms) const noexcept;

  ConnectivityProfile profile_;
  std::vector<UpWindow> windows_;
};

}  // namespace podas::agent
