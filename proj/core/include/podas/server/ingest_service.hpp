#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "podas/codec.hpp"
#include "podas/detection.hpp"
#include "podas/server/event_store.hpp"
#include "podas/server/reading_store.hpp"
#include "podas/transport.hpp"

namespace podas::server {

/// A batch failed validation; nothing from it was stored.
class BatchRejectedError : public ValidationError {
 public:
  BatchRejectedError(const std::string& what, std::vector<std::int64_t> offending_seqs)
      : ValidationError(what), offending_seqs_(std::move(offending_seqs)) {}
  const std::vector<std::int64_t>& offending_seqs() const noexcept { return offending_seqs_; }

 private:
  std::vector<std::int64_t> offending_seqs_;
};

struct ServerOptions {
  std::filesystem::path data_dir;
  /// Installed on first start only; afterwards the persisted set wins.
  detection::Thresholds initial_thresholds{};
  double cluster_radius_m = detection::kDefaultClusterRadiusM;
  bool fsync = true;
};

enum class BucketSize { Hour, Day };

std::optional<BucketSize> parse_bucket(std::string_view name) noexcept;
std::int64_t bucket_width_ms(BucketSize b) noexcept;

struct StatsBucket {
  std::int64_t bucket_start_ms = 0;
  std::size_t new_events = 0;
  std::size_t new_readings = 0;

  friend bool operator==(const StatsBucket&, const StatsBucket&) = default;
};

/// Ingestion hub: idempotent batch ingest, on-ingest classification and
/// clustering, and the read-side queries.
///
/// Every state change is one line in `<data_dir>/commit.log` (a batch of new
/// readings, or a threshold change), written and synced before it is applied
/// in memory. Start-up replays the log, so events are always a deterministic
/// function of the committed history and a restart reproduces the exact
/// pre-crash state. Writers are serialized; readers work on immutable
/// snapshots and never wait for an ingest in progress.
class IngestService {
 public:
  explicit IngestService(ServerOptions options);
  ~IngestService();
  IngestService(const IngestService&) = delete;
  IngestService& operator=(const IngestService&) = delete;

  /// Throws BatchRejectedError for invalid batches (store untouched).
  IngestResult ingest_batch(const ReadingBatch& batch);

  std::vector<detection::PotholeEvent> get_potholes(const PotholeFilter& filter = {}) const;
  json export_geojson(const PotholeFilter& filter = {}) const;
  std::vector<StatsBucket> get_stats(BucketSize bucket,
                                     std::optional<std::int64_t> since_ms = std::nullopt,
                                     std::optional<std::int64_t> until_ms = std::nullopt) const;

  /// Throws ValidationError when the thresholds break their invariants.
  void put_thresholds(const detection::Thresholds& t);
  detection::Thresholds get_thresholds() const;
  detection::Thresholds post_calibrate(std::span<const SensorReading> readings,
                                       const detection::CalibrationOptions& opts = {});

  /// Monotonic; bumps on every committed change.
  std::uint64_t version() const;
  std::size_t reading_count() const;
  std::size_t event_count() const;

  std::uint64_t reading_state_hash() const;
  std::uint64_t event_state_hash() const;

 private:
  struct Snapshot;
  struct FileCloser {
    void operator()(std::FILE* f) const noexcept;
  };

  void replay();
  void append_record(const json& record);
  void apply_batch(std::vector<SensorReading> fresh);
  void apply_thresholds(const detection::Thresholds& t);
  void publish();
  std::shared_ptr<const Snapshot> snapshot() const;

  ServerOptions options_;
  std::filesystem::path log_path_;

  mutable std::mutex write_mu_;  // serializes every state change
  std::unique_ptr<std::FILE, FileCloser> log_;
  ReadingStore readings_;
  EventStore events_;
  detection::Thresholds thresholds_;
  std::uint64_t version_ = 0;
  std::vector<std::shared_ptr<const std::vector<std::int64_t>>> reading_ts_chunks_;

  mutable std::mutex snap_mu_;  // guards only the pointer swap
  std::shared_ptr<const Snapshot> snap_;
};

/// In-process uplink mapping service outcomes onto delivery results, for
/// agents that share a process with the server.
class LocalTransport final : public Transport {
 public:
  explicit LocalTransport(IngestService& service) : service_(service) {}
  DeliveryResult deliver(const ReadingBatch& batch) override;

 private:
  IngestService& service_;
};

}  // namespace podas::server
