#pragma once

// JSON encodings shared by the simulator, agent, server and CLI:
//  - trace files: one SensorReading object per line
//  - profile files: a road header line followed by one line per pothole
//  - the uplink ReadingBatch document and its acknowledgment
//  - thresholds, events and GeoJSON exports

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "podas/detection.hpp"
#include "podas/domain.hpp"
#include "podas/roadsim.hpp"

namespace podas {

using json = nlohmann::json;

/// Malformed input. `line()` is the 1-based line of the offending record
/// when known, 0 otherwise.
class FormatError : public Error {
 public:
  /// Message reads "<file>: line <n>: <detail>", omitting absent parts.
  explicit FormatError(const std::string& detail, std::size_t line = 0,
                       const std::string& file = {})
      : Error(compose(detail, line, file)), detail_(detail), line_(line) {}
  const std::string& detail() const noexcept { return detail_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string compose(const std::string& detail, std::size_t line,
                             const std::string& file) {
    std::string out = file.empty() ? "" : file + ": ";
    if (line) out += "line " + std::to_string(line) + ": ";
    return out + detail;
  }

  std::string detail_;
  std::size_t line_;
};

struct ReadingBatch {
  std::string node_id;
  std::int64_t batch_seq = 0;
  std::vector<SensorReading> readings;

  friend bool operator==(const ReadingBatch&, const ReadingBatch&) = default;
};

struct IngestResult {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;

  friend bool operator==(const IngestResult&, const IngestResult&) = default;
};

// nlohmann ADL hooks. The reading form carries node_id; the wire form inside a
// batch omits it.
void to_json(json& j, const GeoPoint& p);
void from_json(const json& j, GeoPoint& p);
void to_json(json& j, const SensorReading& r);
void from_json(const json& j, SensorReading& r);
void to_json(json& j, const ReadingBatch& b);
void from_json(const json& j, ReadingBatch& b);
void to_json(json& j, const IngestResult& r);
void from_json(const json& j, IngestResult& r);

namespace detection {
void to_json(json& j, const Thresholds& t);
void from_json(const json& j, Thresholds& t);
void to_json(json& j, const PotholeEvent& ev);
void from_json(const json& j, PotholeEvent& ev);
}  // namespace detection

json reading_to_wire(const SensorReading& r);
SensorReading reading_from_wire(const json& j, const std::string& node_id);

/// Parses a whole JSON document, reporting the failing line on error.
json parse_document(std::string_view text);
json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

/// Parses non-empty lines as JSON objects; errors name the line.
std::vector<json> parse_lines(std::string_view text);
std::string read_file(const std::filesystem::path& path);

std::vector<SensorReading> read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, std::span<const SensorReading> trace);

roadsim::RoadProfile read_profile(const std::filesystem::path& path);
void write_profile(const std::filesystem::path& path, const roadsim::RoadProfile& profile);

/// RFC 7946 FeatureCollection with one Point feature per event.
json to_geojson(std::span<const detection::PotholeEvent> events);

/// Accepts a GeoJSON FeatureCollection, a JSON array of events, or one event
/// per line; an empty file yields no events.
std::vector<detection::PotholeEvent> read_events(const std::filesystem::path& path);

/// Accepts a profile file (centroids of its potholes), a JSON array of
/// {lat, lon} objects, or a GeoJSON FeatureCollection of points.
std::vector<GeoPoint> read_truth(const std::filesystem::path& path);

}  // namespace podas
