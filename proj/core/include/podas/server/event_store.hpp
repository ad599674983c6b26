#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "podas/detection.hpp"

namespace podas::server {

/// [min_lon, min_lat, max_lon, max_lat], inclusive.
struct BBox {
  double min_lon = -180.0;
  double min_lat = -90.0;
  double max_lon = 180.0;
  double max_lat = 90.0;

  bool well_formed() const noexcept;
  bool contains(const GeoPoint& p) const noexcept {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }
};

/// Parses "min_lon,min_lat,max_lon,max_lat"; empty when malformed, out of the
/// WGS-84 ranges, or when a minimum exceeds its maximum.
std::optional<BBox> parse_bbox(std::string_view text);

struct PotholeFilter {
  std::optional<BBox> bbox;
  std::optional<std::int64_t> since_ms;  // matches last_seen_ms >= since_ms
  std::optional<Severity> min_severity;

  bool matches(const detection::PotholeEvent& ev) const noexcept;
};

/// Immutable view of the events at one store version, with a recency order
/// and a coarse lat/lon grid for bbox queries. Readers hold it by shared_ptr
/// and never block the writer.
class EventIndex {
 public:
  explicit EventIndex(std::vector<std::shared_ptr<const detection::PotholeEvent>> events);

  /// Matching events sorted by last_seen_ms descending, ties by event_id.
  std::vector<detection::PotholeEvent> query(const PotholeFilter& filter) const;
  std::size_t size() const noexcept { return events_.size(); }
  const std::vector<std::shared_ptr<const detection::PotholeEvent>>& events() const noexcept {
    return events_;
  }

 private:
  std::vector<std::shared_ptr<const detection::PotholeEvent>> events_;
  std::vector<std::size_t> rank_;  // position of each event in recency order
  std::unordered_map<std::int64_t, std::vector<std::size_t>> grid_;
};

/// Writer-side event collection. Not thread-safe; the ingest service
/// serializes all merges.
class EventStore {
 public:
  EventStore();

  /// Clusters the Pothole-labelled readings into the store and republishes
  /// the index. Returns true when any event was created or grown.
  bool merge(std::span<const detection::LabeledReading> labeled, double cluster_radius_m);

  std::shared_ptr<const EventIndex> index() const noexcept { return index_; }
  const std::vector<detection::PotholeEvent>& events() const noexcept { return events_; }
  std::uint64_t state_hash() const noexcept;

 private:
  std::vector<detection::PotholeEvent> events_;
  std::vector<std::shared_ptr<const detection::PotholeEvent>> shared_;
  std::shared_ptr<const EventIndex> index_;
};

}  // namespace podas::server
