#include "podas/codec.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace podas {
namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw FormatError("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field \"") + key + "\"");
  return *it;
}

std::int64_t int_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer()) {
    throw FormatError(std::string("field \"") + key + "\" must be an integer");
  }
  return v.get<std::int64_t>();
}

double num_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) throw FormatError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

std::string str_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw FormatError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Calls fn(line_no, line) for each non-blank line; line numbers are 1-based.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    fn(line_no, line);
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<GeoPoint> points_from_geojson(const json& doc) {
  std::vector<GeoPoint> out;
  for (const auto& f : field(doc, "features")) {
    const auto& coords = field(field(f, "geometry"), "coordinates");
    if (!coords.is_array() || coords.size() < 2) throw FormatError("bad Point coordinates");
    out.push_back({coords[1].get<double>(), coords[0].get<double>()});
  }
  return out;
}

}  // namespace

void to_json(json& j, const GeoPoint& p) { j = json{{"lat", p.lat}, {"lon", p.lon}}; }

void from_json(const json& j, GeoPoint& p) {
  p.lat = num_field(j, "lat");
  p.lon = num_field(j, "lon");
}

void to_json(json& j, const SensorReading& r) {
  j = json{{"node_id", r.node_id},         {"seq", r.seq},
           {"ts_ms", r.ts_ms},             {"lat", r.pos.lat},
           {"lon", r.pos.lon},             {"ultrasonic_in", r.ultrasonic_in},
           {"accel_z", r.accel_z}};
}

void from_json(const json& j, SensorReading& r) {
  r = reading_from_wire(j, str_field(j, "node_id"));
}

json reading_to_wire(const SensorReading& r) {
  return json{{"seq", r.seq},
              {"ts_ms", r.ts_ms},
              {"lat", r.pos.lat},
              {"lon", r.pos.lon},
              {"ultrasonic_in", r.ultrasonic_in},
              {"accel_z", r.accel_z}};
}

SensorReading reading_from_wire(const json& j, const std::string& node_id) {
  SensorReading r;
  r.node_id = node_id;
  r.seq = int_field(j, "seq");
  r.ts_ms = int_field(j, "ts_ms");
  r.pos.lat = num_field(j, "lat");
  r.pos.lon = num_field(j, "lon");
  r.ultrasonic_in = num_field(j, "ultrasonic_in");
  r.accel_z = num_field(j, "accel_z");
  return r;
}

void to_json(json& j, const ReadingBatch& b) {
  json readings = json::array();
  for (const auto& r : b.readings) readings.push_back(reading_to_wire(r));
  j = json{{"node_id", b.node_id}, {"batch_seq", b.batch_seq}, {"readings", std::move(readings)}};
}

void from_json(const json& j, ReadingBatch& b) {
  b.node_id = str_field(j, "node_id");
  b.batch_seq = int_field(j, "batch_seq");
  const auto& readings = field(j, "readings");
  if (!readings.is_array()) throw FormatError("field \"readings\" must be an array");
  b.readings.clear();
  b.readings.reserve(readings.size());
  for (const auto& r : readings) b.readings.push_back(reading_from_wire(r, b.node_id));
}

void to_json(json& j, const IngestResult& r) {
  j = json{{"accepted", r.accepted}, {"duplicates", r.duplicates}};
}

void from_json(const json& j, IngestResult& r) {
  r.accepted = static_cast<std::size_t>(int_field(j, "accepted"));
  r.duplicates = static_cast<std::size_t>(int_field(j, "duplicates"));
}

namespace detection {

void to_json(json& j, const Thresholds& t) {
  j = json{{"ultrasonic_base_in", t.ultrasonic_base_in},
           {"severe_cutoff_in", t.severe_cutoff_in},
           {"accel_z_threshold", t.accel_z_threshold},
           {"calibrated_at_ms", nullptr}};
  if (t.calibrated_at_ms) j["calibrated_at_ms"] = *t.calibrated_at_ms;
}

void from_json(const json& j, Thresholds& t) {
  t.ultrasonic_base_in = num_field(j, "ultrasonic_base_in");
  t.severe_cutoff_in = num_field(j, "severe_cutoff_in");
  t.accel_z_threshold = num_field(j, "accel_z_threshold");
  t.calibrated_at_ms.reset();
  if (auto it = j.find("calibrated_at_ms"); it != j.end() && !it->is_null()) {
    t.calibrated_at_ms = int_field(j, "calibrated_at_ms");
  }
}

void to_json(json& j, const PotholeEvent& ev) {
  json refs = json::array();
  for (const auto& m : ev.members) refs.push_back({{"node_id", m.node_id}, {"seq", m.seq}});
  j = json{{"event_id", ev.event_id},
           {"lat", ev.centroid.lat},
           {"lon", ev.centroid.lon},
           {"severity", to_string(ev.severity)},
           {"confidence", to_string(ev.confidence)},
           {"n_readings", ev.n_readings()},
           {"first_seen_ms", ev.first_seen_ms},
           {"last_seen_ms", ev.last_seen_ms},
           {"member_refs", std::move(refs)}};
}

void from_json(const json& j, PotholeEvent& ev) {
  ev.event_id = str_field(j, "event_id");
  ev.centroid = {num_field(j, "lat"), num_field(j, "lon")};
  auto sev = parse_severity(str_field(j, "severity"));
  auto conf = parse_confidence(str_field(j, "confidence"));
  if (!sev || !conf) throw FormatError("unknown severity or confidence");
  ev.severity = *sev;
  ev.confidence = *conf;
  ev.first_seen_ms = int_field(j, "first_seen_ms");
  ev.last_seen_ms = int_field(j, "last_seen_ms");
  ev.members.clear();
  if (auto it = j.find("member_refs"); it != j.end()) {
    for (const auto& m : *it) {
      ev.members.push_back({str_field(m, "node_id"), int_field(m, "seq"), {}, 0});
    }
  }
}

}  // namespace detection

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return parse_document(text);
  } catch (const FormatError& e) {
    throw FormatError(e.detail(), e.line(), path.string());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::vector<json> parse_lines(std::string_view text) {
  std::vector<json> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      auto j = json::parse(line.begin(), line.end());
      if (!j.is_object()) throw FormatError("expected a JSON object", line_no);
      out.push_back(std::move(j));
    } catch (const json::parse_error& e) {
      throw FormatError(e.what(), line_no);
    }
  });
  return out;
}

std::vector<SensorReading> read_trace(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<SensorReading> trace;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      auto r = json::parse(line.begin(), line.end()).get<SensorReading>();
      if (auto why = check(r)) throw FormatError(*why);
      if (!trace.empty() && trace.back().node_id == r.node_id && r.seq <= trace.back().seq) {
        throw FormatError("seq must increase along a node's trace");
      }
      trace.push_back(std::move(r));
    } catch (const FormatError& e) {
      throw FormatError(e.detail(), line_no, path.string());
    } catch (const json::exception& e) {
      throw FormatError(e.what(), line_no, path.string());
    }
  });
  return trace;
}

void write_trace(const std::filesystem::path& path, std::span<const SensorReading> trace) {
  std::string text;
  for (const auto& r : trace) {
    text += json(r).dump();
    text += '\n';
  }
  write_text(path, text);
}

roadsim::RoadProfile read_profile(const std::filesystem::path& path) {
  const auto text = read_file(path);
  roadsim::RoadProfile profile;
  bool have_header = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      const auto rec = json::parse(line.begin(), line.end());
      const auto kind = str_field(rec, "record");
      if (!have_header) {
        if (kind != "road") throw FormatError("first record must be the road header");
        profile.length_m = num_field(rec, "length_m");
        profile.origin = field(rec, "origin").get<GeoPoint>();
        profile.bearing_deg = num_field(rec, "bearing_deg");
        const auto& seed = field(rec, "seed");
        if (!seed.is_number_unsigned()) throw FormatError("seed must be a non-negative integer");
        profile.seed = seed.get<std::uint64_t>();
        have_header = true;
      } else {
        if (kind != "pothole") throw FormatError("expected a pothole record");
        profile.potholes.push_back(
            {num_field(rec, "start_m"), num_field(rec, "length_m"), num_field(rec, "depth_in")});
      }
    } catch (const FormatError& e) {
      throw FormatError(e.detail(), line_no, path.string());
    } catch (const json::exception& e) {
      throw FormatError(e.what(), line_no, path.string());
    }
  });
  if (!have_header) throw FormatError("empty profile file", 0, path.string());
  try {
    roadsim::validate(profile);
  } catch (const ValidationError& e) {
    throw FormatError(e.what(), 0, path.string());
  }
  return profile;
}

void write_profile(const std::filesystem::path& path, const roadsim::RoadProfile& profile) {
  std::string text = json{{"record", "road"},
                          {"length_m", profile.length_m},
                          {"origin", profile.origin},
                          {"bearing_deg", profile.bearing_deg},
                          {"seed", profile.seed},
                          {"n_potholes", profile.potholes.size()}}
                         .dump();
  text += '\n';
  for (const auto& h : profile.potholes) {
    text += json{{"record", "pothole"},
                 {"start_m", h.start_m},
                 {"length_m", h.length_m},
                 {"depth_in", h.depth_in}}
                .dump();
    text += '\n';
  }
  write_text(path, text);
}

json to_geojson(std::span<const detection::PotholeEvent> events) {
  json features = json::array();
  for (const auto& ev : events) {
    features.push_back({
        {"type", "Feature"},
        {"id", ev.event_id},
        {"geometry", {{"type", "Point"}, {"coordinates", {ev.centroid.lon, ev.centroid.lat}}}},
        {"properties",
         {{"event_id", ev.event_id},
          {"severity", to_string(ev.severity)},
          {"confidence", to_string(ev.confidence)},
          {"n_readings", ev.n_readings()},
          {"first_seen_ms", ev.first_seen_ms},
          {"last_seen_ms", ev.last_seen_ms}}},
    });
  }
  return json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

std::vector<detection::PotholeEvent> read_events(const std::filesystem::path& path) {
  const auto text = read_file(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};

  std::vector<detection::PotholeEvent> events;
  json doc;
  bool whole = true;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    whole = false;
  }

  try {
    if (whole && doc.is_object() && doc.value("type", "") == "FeatureCollection") {
      for (const auto& f : field(doc, "features")) {
        const auto& props = field(f, "properties");
        const auto& coords = field(field(f, "geometry"), "coordinates");
        if (!coords.is_array() || coords.size() < 2) throw FormatError("bad Point coordinates");
        detection::PotholeEvent ev;
        ev.event_id = str_field(props, "event_id");
        ev.centroid = {coords[1].get<double>(), coords[0].get<double>()};
        ev.severity = parse_severity(str_field(props, "severity")).value_or(Severity::Pothole);
        ev.confidence =
            parse_confidence(str_field(props, "confidence")).value_or(Confidence::Low);
        ev.first_seen_ms = int_field(props, "first_seen_ms");
        ev.last_seen_ms = int_field(props, "last_seen_ms");
        events.push_back(std::move(ev));
      }
      return events;
    }
    if (whole && doc.is_array()) {
      for (const auto& e : doc) events.push_back(e.get<detection::PotholeEvent>());
      return events;
    }
  } catch (const FormatError& e) {
    throw FormatError(e.what(), 0, path.string());
  } catch (const json::exception& e) {
    throw FormatError(e.what(), 0, path.string());
  }

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      events.push_back(json::parse(line.begin(), line.end()).get<detection::PotholeEvent>());
    } catch (const FormatError& e) {
      throw FormatError(e.detail(), line_no, path.string());
    } catch (const json::exception& e) {
      throw FormatError(e.what(), line_no, path.string());
    }
  });
  return events;
}

std::vector<GeoPoint> read_truth(const std::filesystem::path& path) {
  const auto text = read_file(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  try {
    const auto doc = json::parse(text);
    if (doc.is_array()) return doc.get<std::vector<GeoPoint>>();
    if (doc.is_object() && doc.value("type", "") == "FeatureCollection") {
      return points_from_geojson(doc);
    }
  } catch (const json::parse_error&) {
    // Multi-line profile files are not a single JSON document.
  } catch (const FormatError& e) {
    throw FormatError(e.what(), 0, path.string());
  } catch (const json::exception& e) {
    throw FormatError(e.what(), 0, path.string());
  }
  return roadsim::export_ground_truth(read_profile(path));
}

}  // namespace podas
