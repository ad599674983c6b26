#pragma once

// Threshold calibration, dual-sensor point classification and incremental
// clustering of pothole points into geolocated events.
//
// A point is a pothole when the ultrasonic distance exceeds the severe cutoff
// or the vertical acceleration exceeds its threshold; the accelerometer acts
// as the fallback when the ultrasonic sample misses a hole. Both firing
// together grades the point High confidence.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "podas/domain.hpp"

namespace podas::detection {

class TooFewReadingsError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kMinCalibrationReadings = 30;
inline constexpr double kDefaultKSigma = 5.0;
inline constexpr double kDefaultSevereDeltaIn = 4.0;
inline constexpr double kDefaultClusterRadiusM = 5.0;

struct Thresholds {
  double ultrasonic_base_in = 6.0;
  double severe_cutoff_in = 10.0;
  double accel_z_threshold = 1150.0;
  std::optional<std::int64_t> calibrated_at_ms;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

std::optional<std::string> check(const Thresholds& t);
void validate(const Thresholds& t);

struct CalibrationOptions {
  double k_sigma = kDefaultKSigma;
  double severe_delta_in = kDefaultSevereDeltaIn;
};

/// Baselines are mean + k_sigma * sample standard deviation over a run on a
/// well-maintained road. calibrated_at_ms is the latest reading timestamp.
Thresholds calibrate(std::span<const SensorReading> readings,
                     const CalibrationOptions& opts = {});

struct PointLabel {
  Severity severity = Severity::Normal;
  bool ultrasonic_hit = false;   // d > severe cutoff
  bool maintenance_hit = false;  // base < d <= severe cutoff
  bool accel_hit = false;        // accel_z > threshold
  Confidence confidence = Confidence::Low;

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

PointLabel classify_point(const SensorReading& reading, const Thresholds& t) noexcept;

struct MemberRef {
  std::string node_id;
  std::int64_t seq = 0;
  GeoPoint pos;
  std::int64_t ts_ms = 0;

  friend bool operator==(const MemberRef&, const MemberRef&) = default;
};

struct PotholeEvent {
  std::string event_id;
  GeoPoint centroid;
  Severity severity = Severity::Pothole;
  Confidence confidence = Confidence::Low;
  std::int64_t first_seen_ms = 0;
  std::int64_t last_seen_ms = 0;
  std::vector<MemberRef> members;

  std::size_t n_readings() const noexcept { return members.size(); }
  friend bool operator==(const PotholeEvent&, const PotholeEvent&) = default;
};

struct LabeledReading {
  SensorReading reading;
  PointLabel label;
};

/// Arithmetic mean of member coordinates.
GeoPoint centroid_of(std::span<const MemberRef> members) noexcept;

/// Greedy incremental clustering: each Pothole-severity point joins the
/// nearest event whose centroid lies within `cluster_radius_m`, else it founds
/// a new event. Points already recorded as members are skipped. The input is
/// expected in timestamp order; the result is a pure function of that order.
std::vector<PotholeEvent> cluster_events(std::span<const LabeledReading> labeled,
                                         double cluster_radius_m,
                                         std::vector<PotholeEvent> existing);

/// In-place variant used by the server's event store. Returns the indices of
/// the events created or grown, ascending.
std::vector<std::size_t> cluster_into(std::vector<PotholeEvent>& events,
                                      std::span<const LabeledReading> labeled,
                                      double cluster_radius_m);

struct Metrics {
  std::optional<double> recall;     // empty when there is no ground truth
  std::optional<double> precision;  // empty when there are no events
  std::size_t matched = 0;
  std::size_t missed = 0;
  std::size_t spurious = 0;
};

/// Greedy nearest-first one-to-one matching of event centroids to ground
/// truth points within `match_radius_m`.
Metrics detection_metrics(std::span<const GeoPoint> events,
                          std::span<const GeoPoint> truth, double match_radius_m);

Metrics detection_metrics(std::span<const PotholeEvent> events,
                          std::span<const GeoPoint> truth, double match_radius_m);

}  // namespace podas::detection
