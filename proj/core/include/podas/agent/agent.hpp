#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "podas/agent/cache_queue.hpp"
#include "podas/agent/clock.hpp"
#include "podas/agent/connectivity.hpp"
#include "podas/transport.hpp"

namespace podas::agent {

struct AgentConfig {
  std::string node_id;
  std::filesystem::path spool_dir;
  std::size_t mem_cap = 1024;
  std::size_t batch_cap = 50;
  std::int64_t backoff_initial_ms = 500;
  std::int64_t backoff_max_ms = 30'000;
  std::int64_t tick_ms = 5'000;
  std::optional<std::uintmax_t> max_log_bytes;
  bool fsync = true;
};

struct FlushReport {
  std::size_t batches = 0;  // delivery attempts
  std::size_t sent = 0;     // readings transmitted, retransmissions included
  std::size_t acked = 0;
  std::size_t quarantined = 0;
  std::size_t retries = 0;
};

struct SessionReport {
  std::size_t carried_over = 0;  // queued before the session started
  std::size_t enqueued = 0;
  std::size_t sent = 0;
  std::size_t acked = 0;
  std::size_t quarantined = 0;
  std::size_t remaining = 0;
  std::size_t batches = 0;
  std::size_t retries = 0;
  std::size_t acked_during_drive = 0;
  std::int64_t max_latency_ms = 0;  // reading timestamp to acknowledgment

  /// carried_over + enqueued == acked + quarantined + remaining
  bool conserved() const noexcept {
    return carried_over + enqueued == acked + quarantined + remaining;
  }
};

struct SessionOptions {
  // Keep flushing after the trace ends until the queue drains or no
  // further up-window exists.
  bool drain = true;
  // Give up draining this long after the last reading.
  std::int64_t drain_horizon_ms = 7LL * 24 * 3600 * 1000;
};

/// Vehicle-side store-and-forward agent: queues readings durably and
/// delivers them in FIFO batches whenever the uplink is up.
class Agent {
 public:
  Agent(AgentConfig config, Transport& transport, Clock& clock);

  void enqueue(const SensorReading& reading);

  /// Sends batches while the link is up and the queue is non-empty. A failed
  /// delivery is retried with the same batch_seq after exponential backoff; a
  /// rejected batch is appended to the dead-letter file and dropped from the
  /// queue. Stops when the window closes, the queue drains, or at `deadline_ms`.
  FlushReport flush(const ConnectivitySchedule& schedule, std::size_t batch_cap,
                    std::optional<std::int64_t> deadline_ms = std::nullopt);

  /// Replays `trace` in timestamp order against the clock, flushing on
  /// connectivity transitions and every tick_ms while connected.
  SessionReport run_session(std::span<const SensorReading> trace,
                            const ConnectivitySchedule& schedule,
                            const SessionOptions& opts = {});

  const CacheQueue& queue() const noexcept { return queue_; }
  std::filesystem::path dead_letter_path() const;

 private:
  void quarantine(const ReadingBatch& batch, const DeliveryResult& result);

  AgentConfig config_;
  Transport& transport_;
  Clock& clock_;
  CacheQueue queue_;
  std::int64_t backoff_ms_;
  std::int64_t max_latency_ms_ = 0;
};

}  // namespace podas::agent
