#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace podas {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a value violates a domain invariant (bad coordinates, negative
/// distances, inconsistent thresholds).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// WGS-84 coordinate in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p) noexcept;

/// Throws ValidationError when the point is outside the WGS-84 ranges.
void validate(const GeoPoint& p);

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Moves `origin` by `distance_m` along `bearing_deg` (clockwise from north)
/// using a local equirectangular projection. Accurate to well under a percent
/// for displacements of a few kilometres.
GeoPoint displace(const GeoPoint& origin, double bearing_deg,
                  double distance_m) noexcept;

struct SensorReading {
  std::string node_id;
  std::int64_t seq = 0;
  std::int64_t ts_ms = 0;
  GeoPoint pos;
  double ultrasonic_in = 0.0;  // sensor-to-ground distance, inches
  double accel_z = 0.0;        // raw accelerometer counts

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

/// Empty when the reading is valid; otherwise a short description of the
/// first violated invariant.
std::optional<std::string> check(const SensorReading& r);

/// Identity of a reading across the whole system.
struct ReadingKey {
  std::string node_id;
  std::int64_t seq = 0;

  friend auto operator<=>(const ReadingKey&, const ReadingKey&) = default;
  friend bool operator==(const ReadingKey&, const ReadingKey&) = default;
};

inline ReadingKey key_of(const SensorReading& r) { return {r.node_id, r.seq}; }

enum class Severity : std::uint8_t { Normal = 0, MaintenanceNeeded = 1, Pothole = 2 };

enum class Confidence : std::uint8_t { Low = 0, High = 1 };

std::string_view to_string(Severity s) noexcept;
std::string_view to_string(Confidence c) noexcept;

/// Accepts the canonical names ("Normal", "MaintenanceNeeded", "Pothole").
std::optional<Severity> parse_severity(std::string_view name) noexcept;
std::optional<Confidence> parse_confidence(std::string_view name) noexcept;

}  // namespace podas
