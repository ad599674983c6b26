#pragma once

#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "podas/domain.hpp"

namespace podas::agent {

/// Reading arrived with a seq not above the last enqueued one.
class OutOfOrderError : public Error {
 public:
  using Error::Error;
};

/// The spill log cannot be written. Fatal: readings are never dropped silently.
class StorageFullError : public Error {
 public:
  using Error::Error;
};

struct CacheQueueOptions {
  std::size_t mem_cap = 1024;
  std::optional<std::uintmax_t> max_log_bytes;  // unlimited when empty
  bool fsync = true;
};

/// A batch handed out for delivery. Until committed, repeated calls to
/// CacheQueue::next_batch return the same batch_seq and readings.
struct PendingBatch {
  std::int64_t batch_seq = 0;
  std::vector<SensorReading> readings;
};

/// Durable FIFO of one node's readings.
///
/// Every reading is appended to `<dir>/<node>.spool.jsonl` before enqueue
/// returns. Up to mem_cap readings from the head are held in memory; the rest
/// stay only in the log ("spilled") and are paged back in as the head
/// advances. The acked head, the last seq and the in-flight batch live in
/// `<dir>/<node>.head.json`, replaced atomically on each commit, so a restart
/// resumes exactly where the last acknowledgment left off.
///
/// Safe for one enqueuing thread and one flushing thread.
class CacheQueue {
 public:
  CacheQueue(std::filesystem::path dir, std::string node_id, CacheQueueOptions opts = {});
  ~CacheQueue();
  CacheQueue(const CacheQueue&) = delete;
  CacheQueue& operator=(const CacheQueue&) = delete;

  /// Throws ValidationError for an invalid reading or a foreign node_id,
  /// OutOfOrderError for a non-increasing seq and StorageFullError when the
  /// log cannot grow.
  void enqueue(const SensorReading& reading);

  /// The in-flight batch, or a new one of up to `cap` head readings.
  /// Empty optional when the queue is empty.
  std::optional<PendingBatch> next_batch(std::size_t cap);

  /// Drops the in-flight batch from the head. No-op without one.
  void commit_batch();

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::size_t in_memory() const;
  std::size_t spilled() const;
  std::optional<std::int64_t> last_seq() const;
  const std::string& node_id() const noexcept { return node_id_; }
  const std::filesystem::path& log_path() const noexcept { return log_path_; }

 private:
  struct Entry {
    SensorReading reading;
    std::uint64_t bytes;  // length of its log line including '\n'
  };
  struct FileCloser {
    void operator()(std::FILE* f) const noexcept;
  };

  void load();
  void refill();
  void persist_head();
  void open_log(const char* mode);

  std::filesystem::path log_path_;
  std::filesystem::path head_path_;
  std::string node_id_;
  CacheQueueOptions opts_;

  mutable std::mutex mu_;
  std::unique_ptr<std::FILE, FileCloser> log_;
  std::deque<Entry> mem_;
  std::size_t on_disk_only_ = 0;
  std::uint64_t head_offset_ = 0;  // byte offset of the head record
  std::uint64_t disk_offset_ = 0;  // byte offset of the first record not in memory
  std::uint64_t log_bytes_ = 0;
  std::optional<std::int64_t> last_seq_;
  std::int64_t next_batch_seq_ = 0;
  std::optional<std::pair<std::int64_t, std::size_t>> pending_;  // (batch_seq, count)
};

}  // namespace podas::agent
