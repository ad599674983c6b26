#include "podas/server/event_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "podas/server/reading_store.hpp"

namespace podas::server {
namespace {

constexpr double kCellDeg = 0.01;
constexpr std::size_t kMaxGridCells = 4096;

std::int64_t cell_coord(double deg) { return static_cast<std::int64_t>(std::floor(deg / kCellDeg)); }

std::int64_t cell_key(std::int64_t lat_i, std::int64_t lon_i) {
  return (lat_i + 10'000) * 40'000 + (lon_i + 20'000);
}

}  // namespace

bool BBox::well_formed() const noexcept {
  return std::isfinite(min_lon) && std::isfinite(min_lat) && std::isfinite(max_lon) &&
         std::isfinite(max_lat) && min_lon <= max_lon && min_lat <= max_lat &&
         min_lon >= -180.0 && max_lon <= 180.0 && min_lat >= -90.0 && max_lat <= 90.0;
}

std::optional<BBox> parse_bbox(std::string_view text) {
  double v[4];
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (p == end || *p != ',') return std::nullopt;
      ++p;
    }
    auto [next, ec] = std::from_chars(p, end, v[i]);
    if (ec != std::errc{} || !std::isfinite(v[i])) return std::nullopt;
    p = next;
  }
  if (p != end) return std::nullopt;
  BBox b{v[0], v[1], v[2], v[3]};
  if (!b.well_formed()) return std::nullopt;
  return b;
}

bool PotholeFilter::matches(const detection::PotholeEvent& ev) const noexcept {
  if (bbox && !bbox->contains(ev.centroid)) return false;
  if (since_ms && ev.last_seen_ms < *since_ms) return false;
  if (min_severity && ev.severity < *min_severity) return false;
  return true;
}

EventIndex::EventIndex(std::vector<std::shared_ptr<const detection::PotholeEvent>> events)
    : events_(std::move(events)) {
  std::vector<std::size_t> order(events_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = *events_[a];
    const auto& eb = *events_[b];
    if (ea.last_seen_ms != eb.last_seen_ms) return ea.last_seen_ms > eb.last_seen_ms;
    return ea.event_id < eb.event_id;
  });
  rank_.resize(events_.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank_[order[r]] = r;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& c = events_[i]->centroid;
    grid_[cell_key(cell_coord(c.lat), cell_coord(c.lon))].push_back(i);
  }
}

std::vector<detection::PotholeEvent> EventIndex::query(const PotholeFilter& filter) const {
  std::vector<std::size_t> candidates;
  bool scanned = false;
  if (filter.bbox) {
    const auto lat0 = cell_coord(filter.bbox->min_lat);
    const auto lat1 = cell_coord(filter.bbox->max_lat);
    const auto lon0 = cell_coord(filter.bbox->min_lon);
    const auto lon1 = cell_coord(filter.bbox->max_lon);
    const auto cells = static_cast<double>(lat1 - lat0 + 1) * static_cast<double>(lon1 - lon0 + 1);
    if (cells <= static_cast<double>(kMaxGridCells)) {
      for (auto la = lat0; la <= lat1; ++la) {
        for (auto lo = lon0; lo <= lon1; ++lo) {
          if (auto it = grid_.find(cell_key(la, lo)); it != grid_.end()) {
            candidates.insert(candidates.end(), it->second.begin(), it->second.end());
          }
        }
      }
      scanned = true;
    }
  }
  if (!scanned) {
    candidates.resize(events_.size());
    std::iota(candidates.begin(), candidates.end(), 0);
  }

  std::erase_if(candidates, [&](std::size_t i) { return !filter.matches(*events_[i]); });
  std::sort(candidates.begin(), candidates.end(),
            [&](std::size_t a, std::size_t b) { return rank_[a] < rank_[b]; });
  std::vector<detection::PotholeEvent> out;
  out.reserve(candidates.size());
  for (auto i : candidates) out.push_back(*events_[i]);
  return out;
}

EventStore::EventStore() : index_(std::make_shared<const EventIndex>(shared_)) {}

bool EventStore::merge(std::span<const detection::LabeledReading> labeled,
                       double cluster_radius_m) {
  const auto touched = detection::cluster_into(events_, labeled, cluster_radius_m);
  if (touched.empty()) return false;
  shared_.resize(events_.size());
  for (auto i : touched) shared_[i] = std::make_shared<const detection::PotholeEvent>(events_[i]);
  index_ = std::make_shared<const EventIndex>(shared_);
  return true;
}

std::uint64_t EventStore::state_hash() const noexcept {
  Fnv1a h;
  for (const auto& ev : events_) {
    h.str(ev.event_id);
    h.f64(ev.centroid.lat);
    h.f64(ev.centroid.lon);
    h.i64(static_cast<std::int64_t>(ev.severity));
    h.i64(static_cast<std::int64_t>(ev.confidence));
    h.i64(ev.first_seen_ms);
    h.i64(ev.last_seen_ms);
    for (const auto& m : ev.members) {
      h.str(m.node_id);
      h.i64(m.seq);
    }
  }
  return h.digest();
}

}  // namespace podas::server
