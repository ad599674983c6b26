#include "podas/detection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace podas::detection {
namespace {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

// Two-pass mean and sample (n - 1) standard deviation.
template <typename Proj>
MeanStd mean_std(std::span<const SensorReading> xs, Proj proj) {
  double sum = 0.0;
  for (const auto& r : xs) sum += proj(r);
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const auto& r : xs) {
    const double d = proj(r) - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

std::optional<std::string> check(const Thresholds& t) {
  if (!std::isfinite(t.ultrasonic_base_in) || !std::isfinite(t.severe_cutoff_in) ||
      !std::isfinite(t.accel_z_threshold)) {
    return "thresholds must be finite";
  }
  if (!(t.ultrasonic_base_in > 0.0)) return "ultrasonic_base_in must be positive";
  if (!(t.ultrasonic_base_in < t.severe_cutoff_in)) {
    return "ultrasonic_base_in must be below severe_cutoff_in";
  }
  if (!(t.accel_z_threshold > 0.0)) return "accel_z_threshold must be positive";
  return std::nullopt;
}

void validate(const Thresholds& t) {
  if (auto why = check(t)) throw ValidationError(*why);
}

Thresholds calibrate(std::span<const SensorReading> readings,
                     const CalibrationOptions& opts) {
  if (readings.size() < kMinCalibrationReadings) {
    throw TooFewReadingsError("calibration needs at least " +
                              std::to_string(kMinCalibrationReadings) + " readings, got " +
                              std::to_string(readings.size()));
  }
  if (!std::isfinite(opts.k_sigma) || opts.k_sigma < 0.0) {
    throw ValidationError("k_sigma must be finite and non-negative");
  }
  if (!std::isfinite(opts.severe_delta_in) || opts.severe_delta_in <= 0.0) {
    throw ValidationError("severe_delta_in must be positive");
  }
  for (const auto& r : readings) {
    if (auto why = podas::check(r)) {
      throw ValidationError("calibration reading seq " + std::to_string(r.seq) + ": " + *why);
    }
  }

  const auto ultra = mean_std(readings, [](const SensorReading& r) { return r.ultrasonic_in; });
  const auto accel = mean_std(readings, [](const SensorReading& r) { return r.accel_z; });

  Thresholds t;
  t.ultrasonic_base_in = ultra.mean + opts.k_sigma * ultra.stddev;
  t.severe_cutoff_in = t.ultrasonic_base_in + opts.severe_delta_in;
  t.accel_z_threshold = accel.mean + opts.k_sigma * accel.stddev;
  t.calibrated_at_ms =
      std::max_element(readings.begin(), readings.end(), [](const auto& a, const auto& b) {
        return a.ts_ms < b.ts_ms;
      })->ts_ms;
  validate(t);
  return t;
}

PointLabel classify_point(const SensorReading& reading, const Thresholds& t) noexcept {
  PointLabel label;
  const double d = reading.ultrasonic_in;
  label.ultrasonic_hit = d > t.severe_cutoff_in;
  label.maintenance_hit = d > t.ultrasonic_base_in && d <= t.severe_cutoff_in;
  label.accel_hit = reading.accel_z > t.accel_z_threshold;
  if (label.ultrasonic_hit || label.accel_hit) {
    label.severity = Severity::Pothole;
  } else if (label.maintenance_hit) {
    label.severity = Severity::MaintenanceNeeded;
  }
  label.confidence =
      (label.ultrasonic_hit && label.accel_hit) ? Confidence::High : Confidence::Low;
  return label;
}

GeoPoint centroid_of(std::span<const MemberRef> members) noexcept {
  double lat = 0.0;
  double lon = 0.0;
  for (const auto& m : members) {
    lat += m.pos.lat;
    lon += m.pos.lon;
  }
  const auto n = static_cast<double>(members.size());
  return {lat / n, lon / n};
}

std::vector<std::size_t> cluster_into(std::vector<PotholeEvent>& events,
                                      std::span<const LabeledReading> labeled,
                                      double cluster_radius_m) {
  std::set<ReadingKey> seen;
  for (const auto& ev : events) {
    for (const auto& m : ev.members) seen.insert({m.node_id, m.seq});
  }

  std::set<std::size_t> touched;
  for (const auto& [reading, label] : labeled) {
    if (label.severity != Severity::Pothole) continue;
    if (!seen.insert(key_of(reading)).second) continue;

    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double d = haversine_m(events[i].centroid, reading.pos);
      if (d <= cluster_radius_m && (!best || d < best_d)) {
        best = i;
        best_d = d;
      }
    }

    MemberRef member{reading.node_id, reading.seq, reading.pos, reading.ts_ms};
    if (best) {
      auto& ev = events[*best];
      ev.members.push_back(std::move(member));
      ev.centroid = centroid_of(ev.members);
      ev.severity = std::max(ev.severity, label.severity);
      ev.confidence = std::max(ev.confidence, label.confidence);
      ev.first_seen_ms = std::min(ev.first_seen_ms, reading.ts_ms);
      ev.last_seen_ms = std::max(ev.last_seen_ms, reading.ts_ms);
      touched.insert(*best);
    } else {
      PotholeEvent ev;
      ev.event_id = "ev-" + reading.node_id + "-" + std::to_string(reading.seq);
      ev.centroid = reading.pos;
      ev.severity = label.severity;
      ev.confidence = label.confidence;
      ev.first_seen_ms = ev.last_seen_ms = reading.ts_ms;
      ev.members.push_back(std::move(member));
      events.push_back(std::move(ev));
      touched.insert(events.size() - 1);
    }
  }
  return {touched.begin(), touched.end()};
}

std::vector<PotholeEvent> cluster_events(std::span<const LabeledReading> labeled,
                                         double cluster_radius_m,
                                         std::vector<PotholeEvent> existing) {
  cluster_into(existing, labeled, cluster_radius_m);
  return existing;
}

Metrics detection_metrics(std::span<const GeoPoint> events,
                          std::span<const GeoPoint> truth, double match_radius_m) {
  if (!(match_radius_m > 0.0)) throw ValidationError("match radius must be positive");

  // (distance, event index, truth index) for every pair inside the radius.
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t e = 0; e < events.size(); ++e) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double d = haversine_m(events[e], truth[t]);
      if (d <= match_radius_m) pairs.emplace_back(d, e, t);
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<bool> event_used(events.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  Metrics m;
  for (const auto& [d, e, t] : pairs) {
    if (event_used[e] || truth_used[t]) continue;
    event_used[e] = truth_used[t] = true;
    ++m.matched;
  }
  m.missed = truth.size() - m.matched;
  m.spurious = events.size() - m.matched;
  if (!truth.empty()) {
    m.recall = static_cast<double>(m.matched) / static_cast<double>(truth.size());
  }
  if (!events.empty()) {
    m.precision = static_cast<double>(m.matched) / static_cast<double>(events.size());
  }
  return m;
}

Metrics detection_metrics(std::span<const PotholeEvent> events,
                          std::span<const GeoPoint> truth, double match_radius_m) {
  std::vector<GeoPoint> centroids;
  centroids.reserve(events.size());
  for (const auto& ev : events) centroids.push_back(ev.centroid);
  return detection_metrics(centroids, truth, match_radius_m);
}

}  // namespace podas::detection
