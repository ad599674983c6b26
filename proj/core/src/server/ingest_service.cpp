#include "podas/server/ingest_service.hpp"

#include <unistd.h>

#include <algorithm>
#include <map>
#include <set>

namespace podas::server {
namespace {

constexpr std::size_t kMaxStatsBuckets = 100'000;

std::int64_t floor_to(std::int64_t t, std::int64_t width) {
  std::int64_t q = t / width;
  if (t % width != 0 && t < 0) --q;
  return q * width;
}

}  // namespace

std::optional<BucketSize> parse_bucket(std::string_view name) noexcept {
  if (name == "day") return BucketSize::Day;
  if (name == "hour") return BucketSize::Hour;
  return std::nullopt;
}

std::int64_t bucket_width_ms(BucketSize b) noexcept {
  return b == BucketSize::Day ? 86'400'000 : 3'600'000;
}

struct IngestService::Snapshot {
  std::shared_ptr<const EventIndex> events;
  detection::Thresholds thresholds;
  std::uint64_t version = 0;
  std::size_t reading_count = 0;
  std::vector<std::shared_ptr<const std::vector<std::int64_t>>> reading_ts_chunks;
};

void IngestService::FileCloser::operator()(std::FILE* f) const noexcept {
  if (f) std::fclose(f);
}

IngestService::IngestService(ServerOptions options) : options_(std::move(options)) {
  if (options_.data_dir.empty()) throw ValidationError("data directory must be set");
  if (!(options_.cluster_radius_m > 0.0)) throw ValidationError("cluster radius must be positive");
  detection::validate(options_.initial_thresholds);
  std::filesystem::create_directories(options_.data_dir);
  log_path_ = options_.data_dir / "commit.log";
  std::lock_guard lock(write_mu_);
  replay();
  log_.reset(std::fopen(log_path_.c_str(), "ab"));
  if (!log_) throw Error("cannot open commit log " + log_path_.string());
  if (version_ == 0) {
    append_record(json{{"type", "thresholds"}, {"thresholds", options_.initial_thresholds}});
    apply_thresholds(options_.initial_thresholds);
    ++version_;
  }
  publish();
}

IngestService::~IngestService() = default;

void IngestService::replay() {
  if (!std::filesystem::exists(log_path_)) return;
  const auto text = read_file(log_path_);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail of an uncommitted write
    json rec;
    try {
      rec = json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                        text.begin() + static_cast<std::ptrdiff_t>(nl));
    } catch (const json::parse_error& e) {
      if (nl + 1 == text.size()) break;
      throw FormatError(std::string("corrupt record: ") + e.what(), line_no,
                        log_path_.string());
    }
    const auto type = rec.at("type").get<std::string>();
    if (type == "batch") {
      const auto batch = rec.get<ReadingBatch>();
      apply_batch(batch.readings);
    } else if (type == "thresholds") {
      apply_thresholds(rec.at("thresholds").get<detection::Thresholds>());
    } else {
      throw FormatError("unknown record type " + type, line_no, log_path_.string());
    }
    ++version_;
    pos = nl + 1;
  }
  if (pos < text.size()) std::filesystem::resize_file(log_path_, pos);
}

void IngestService::append_record(const json& record) {
  const auto line = record.dump() + "\n";
  const auto before = std::ftell(log_.get());
  const bool ok = std::fwrite(line.data(), 1, line.size(), log_.get()) == line.size() &&
                  std::fflush(log_.get()) == 0 &&
                  (!options_.fsync || ::fsync(::fileno(log_.get())) == 0);
  if (!ok) {
    if (before >= 0) std::filesystem::resize_file(log_path_, static_cast<std::uintmax_t>(before));
    throw Error("cannot append to commit log " + log_path_.string());
  }
}

void IngestService::apply_batch(std::vector<SensorReading> fresh) {
  std::erase_if(fresh, [&](const SensorReading& r) { return !readings_.insert(r); });
  if (fresh.empty()) return;
  std::stable_sort(fresh.begin(), fresh.end(), [](const auto& a, const auto& b) {
    return a.ts_ms != b.ts_ms ? a.ts_ms < b.ts_ms : a.seq < b.seq;
  });

  std::vector<detection::LabeledReading> labeled;
  std::vector<std::int64_t> ts;
  labeled.reserve(fresh.size());
  ts.reserve(fresh.size());
  for (auto& r : fresh) {
    ts.push_back(r.ts_ms);
    const auto label = detection::classify_point(r, thresholds_);
    labeled.push_back({std::move(r), label});
  }
  events_.merge(labeled, options_.cluster_radius_m);
  reading_ts_chunks_.push_back(std::make_shared<const std::vector<std::int64_t>>(std::move(ts)));
}

void IngestService::apply_thresholds(const detection::Thresholds& t) {
  detection::validate(t);
  thresholds_ = t;
}

void IngestService::publish() {
  auto snap = std::make_shared<Snapshot>();
  snap->events = events_.index();
  snap->thresholds = thresholds_;
  snap->version = version_;
  snap->reading_count = readings_.size();
  snap->reading_ts_chunks = reading_ts_chunks_;
  std::lock_guard lock(snap_mu_);
  snap_ = std::move(snap);
}

std::shared_ptr<const IngestService::Snapshot> IngestService::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return snap_;
}

IngestResult IngestService::ingest_batch(const ReadingBatch& batch) {
  if (batch.node_id.empty()) throw BatchRejectedError("batch node_id is empty", {});
  if (batch.readings.empty()) throw BatchRejectedError("batch has no readings", {});
  std::vector<std::int64_t> offending;
  std::string first_reason;
  for (const auto& r : batch.readings) {
    auto why = check(r);
    if (!why && r.node_id != batch.node_id) why = "node_id differs from the batch";
    if (why) {
      if (first_reason.empty()) first_reason = *why;
      offending.push_back(r.seq);
    }
  }
  if (!offending.empty()) {
    throw BatchRejectedError("invalid readings (" + first_reason + ")", std::move(offending));
  }

  std::lock_guard lock(write_mu_);
  IngestResult result;
  std::vector<SensorReading> fresh;
  std::set<std::int64_t> in_batch;
  for (const auto& r : batch.readings) {
    if (readings_.contains(key_of(r)) || !in_batch.insert(r.seq).second) {
      ++result.duplicates;
    } else {
      fresh.push_back(r);
    }
  }
  result.accepted = fresh.size();
  if (fresh.empty()) return result;

  ReadingBatch committed{batch.node_id, batch.batch_seq, fresh};
  json record = committed;
  record["type"] = "batch";
  append_record(record);
  apply_batch(std::move(fresh));
  ++version_;
  publish();
  return result;
}

std::vector<detection::PotholeEvent> IngestService::get_potholes(const PotholeFilter& filter) const {
  if (filter.bbox && !filter.bbox->well_formed()) throw ValidationError("malformed bbox");
  return snapshot()->events->query(filter);
}

json IngestService::export_geojson(const PotholeFilter& filter) const {
  return to_geojson(get_potholes(filter));
}

std::vector<StatsBucket> IngestService::get_stats(BucketSize bucket,
                                                  std::optional<std::int64_t> since_ms,
                                                  std::optional<std::int64_t> until_ms) const {
  const auto snap = snapshot();
  const auto width = bucket_width_ms(bucket);
  auto in_range = [&](std::int64_t t) {
    return (!since_ms || t >= *since_ms) && (!until_ms || t <= *until_ms);
  };

  std::map<std::int64_t, StatsBucket> counts;
  for (const auto& ev : snap->events->events()) {
    if (!in_range(ev->first_seen_ms)) continue;
    ++counts[floor_to(ev->first_seen_ms, width)].new_events;
  }
  for (const auto& chunk : snap->reading_ts_chunks) {
    for (auto t : *chunk) {
      if (in_range(t)) ++counts[floor_to(t, width)].new_readings;
    }
  }

  std::optional<std::int64_t> first;
  if (since_ms) {
    first = floor_to(*since_ms, width);
  } else if (!counts.empty()) {
    first = counts.begin()->first;
  }
  if (!first) return {};
  std::int64_t last = *first;
  if (until_ms) {
    last = floor_to(*until_ms, width);
  } else if (!counts.empty()) {
    last = std::max(last, counts.rbegin()->first);
  }
  if (last < *first) return {};
  const auto n = static_cast<std::uint64_t>((last - *first) / width) + 1;
  if (n > kMaxStatsBuckets) throw ValidationError("stats range spans too many buckets");

  std::vector<StatsBucket> series;
  series.reserve(n);
  for (auto b = *first; b <= last; b += width) {
    auto it = counts.find(b);
    StatsBucket s = it == counts.end() ? StatsBucket{} : it->second;
    s.bucket_start_ms = b;
    series.push_back(s);
  }
  return series;
}

void IngestService::put_thresholds(const detection::Thresholds& t) {
  detection::validate(t);
  std::lock_guard lock(write_mu_);
  append_record(json{{"type", "thresholds"}, {"thresholds", t}});
  apply_thresholds(t);
  ++version_;
  publish();
}

detection::Thresholds IngestService::get_thresholds() const { return snapshot()->thresholds; }

detection::Thresholds IngestService::post_calibrate(std::span<const SensorReading> readings,
                                                    const detection::CalibrationOptions& opts) {
  const auto t = detection::calibrate(readings, opts);
  put_thresholds(t);
  return t;
}

std::uint64_t IngestService::version() const { return snapshot()->version; }

std::size_t IngestService::reading_count() const { return snapshot()->reading_count; }

std::size_t IngestService::event_count() const { return snapshot()->events->size(); }

std::uint64_t IngestService::reading_state_hash() const {
  std::lock_guard lock(write_mu_);
  return readings_.state_hash();
}

std::uint64_t IngestService::event_state_hash() const {
  std::lock_guard lock(write_mu_);
  return events_.state_hash();
}

DeliveryResult LocalTransport::deliver(const ReadingBatch& batch) {
  try {
    return DeliveryResult::acked(service_.ingest_batch(batch));
  } catch (const BatchRejectedError& e) {
    return DeliveryResult::rejected(422, e.what());
  } catch (const Error& e) {
    return DeliveryResult::failed(e.what(), 500);
  }
}

}  // namespace podas::server
