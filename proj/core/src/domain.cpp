#include "podas/domain.hpp"

#include <algorithm>
#include <cmath>

namespace podas {

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

void validate(const GeoPoint& p) {
  if (!is_valid(p)) {
    throw ValidationError("coordinate out of range: lat=" + std::to_string(p.lat) +
                          " lon=" + std::to_string(p.lon));
  }
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double s_dphi = std::sin((phi2 - phi1) / 2.0);
  const double s_dlam = std::sin(deg_to_rad(b.lon - a.lon) / 2.0);
  double h = s_dphi * s_dphi + std::cos(phi1) * std::cos(phi2) * s_dlam * s_dlam;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

GeoPoint displace(const GeoPoint& origin, double bearing_deg,
                  double distance_m) noexcept {
  const double theta = deg_to_rad(bearing_deg);
  const double north = distance_m * std::cos(theta);
  const double east = distance_m * std::sin(theta);
  const double dlat = rad_to_deg(north / kEarthRadiusM);
  const double dlon =
      rad_to_deg(east / (kEarthRadiusM * std::cos(deg_to_rad(origin.lat))));
  return {origin.lat + dlat, origin.lon + dlon};
}

std::optional<std::string> check(const SensorReading& r) {
  if (r.node_id.empty()) return "empty node_id";
  if (r.seq < 0) return "negative seq";
  if (!is_valid(r.pos)) return "coordinate out of range";
  if (!std::isfinite(r.ultrasonic_in) || r.ultrasonic_in < 0.0) {
    return "ultrasonic_in must be finite and non-negative";
  }
  if (!std::isfinite(r.accel_z) || r.accel_z < 0.0) {
    return "accel_z must be finite and non-negative";
  }
  return std::nullopt;
}

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Normal: return "Normal";
    case Severity::MaintenanceNeeded: return "MaintenanceNeeded";
    case Severity::Pothole: return "Pothole";
  }
  return "Normal";
}

std::string_view to_string(Confidence c) noexcept {
  return c == Confidence::High ? "High" : "Low";
}

std::optional<Severity> parse_severity(std::string_view name) noexcept {
  if (name == "Normal") return Severity::Normal;
  if (name == "MaintenanceNeeded") return Severity::MaintenanceNeeded;
  if (name == "Pothole") return Severity::Pothole;
  return std::nullopt;
}

std::optional<Confidence> parse_confidence(std::string_view name) noexcept {
  if (name == "Low") return Confidence::Low;
  if (name == "High") return Confidence::High;
  return std::nullopt;
}

}  // namespace podas
