#include "podas/agent/agent.hpp"

#include <algorithm>
#include <fstream>

namespace podas::agent {

Agent::Agent(AgentConfig config, Transport& transport, Clock& clock)
    : config_(std::move(config)),
      transport_(transport),
      clock_(clock),
      queue_(config_.spool_dir, config_.node_id,
             CacheQueueOptions{config_.mem_cap, config_.max_log_bytes, config_.fsync}),
      backoff_ms_(config_.backoff_initial_ms) {
  if (config_.batch_cap == 0) throw ValidationError("batch_cap must be positive");
  if (config_.tick_ms <= 0) throw ValidationError("tick_ms must be positive");
  if (config_.backoff_initial_ms <= 0 || config_.backoff_max_ms < config_.backoff_initial_ms) {
    throw ValidationError("backoff must satisfy 0 < initial <= max");
  }
}

std::filesystem::path Agent::dead_letter_path() const {
  return config_.spool_dir / (config_.node_id + ".deadletter.jsonl");
}

void Agent::enqueue(const SensorReading& reading) { queue_.enqueue(reading); }

void Agent::quarantine(const ReadingBatch& batch, const DeliveryResult& result) {
  json record{{"http_status", result.http_status},
              {"detail", result.detail},
              {"quarantined_at_ms", clock_.now_ms()},
              {"batch", batch}};
  std::ofstream out(dead_letter_path(), std::ios::app | std::ios::binary);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw StorageFullError("cannot write dead-letter file " + dead_letter_path().string());
}

FlushReport Agent::flush(const ConnectivitySchedule& schedule, std::size_t batch_cap,
                         std::optional<std::int64_t> deadline_ms) {
  FlushReport report;
  batch_cap = std::clamp<std::size_t>(batch_cap, 1, config_.mem_cap);
  while (true) {
    const auto now = clock_.now_ms();
    if (!schedule.is_up(now) || (deadline_ms && now >= *deadline_ms)) break;
    auto pending = queue_.next_batch(batch_cap);
    if (!pending) break;

    ReadingBatch batch{config_.node_id, pending->batch_seq, std::move(pending->readings)};
    const auto n = batch.readings.size();
    const auto result = transport_.deliver(batch);
    ++report.batches;
    report.sent += n;

    switch (result.status) {
      case DeliveryResult::Status::Acked: {
        queue_.commit_batch();
        report.acked += n;
        backoff_ms_ = config_.backoff_initial_ms;
        const auto acked_at = clock_.now_ms();
        for (const auto& r : batch.readings) {
          max_latency_ms_ = std::max(max_latency_ms_, acked_at - r.ts_ms);
        }
        break;
      }
      case DeliveryResult::Status::Rejected:
        quarantine(batch, result);
        queue_.commit_batch();
        report.quarantined += n;
        break;
      case DeliveryResult::Status::TransportFailure:
        ++report.retries;
        clock_.sleep_ms(backoff_ms_);
        backoff_ms_ = std::min(backoff_ms_ * 2, config_.backoff_max_ms);
        break;
    }
  }
  return report;
}

SessionReport Agent::run_session(std::span<const SensorReading> trace,
                                 const ConnectivitySchedule& schedule,
                                 const SessionOptions& opts) {
  SessionReport report;
  report.carried_over = queue_.size();
  max_latency_ms_ = 0;

  auto absorb = [&report](const FlushReport& f) {
    report.batches += f.batches;
    report.sent += f.sent;
    report.acked += f.acked;
    report.quarantined += f.quarantined;
    report.retries += f.retries;
  };

  std::int64_t next_tick = trace.empty() ? clock_.now_ms() : trace.front().ts_ms;
  // Flush at every tick while connected and at each down-to-up transition,
  // up to (but excluding) `until`.
  auto pump_until = [&](std::int64_t until) {
    while (true) {
      const auto now = clock_.now_ms();
      std::optional<std::int64_t> next;
      if (schedule.is_up(now)) {
        next = std::max(next_tick, now);
      } else {
        next = schedule.next_up(now);
      }
      if (!next || *next >= until) return;
      clock_.advance_to(*next);
      if (!queue_.empty()) absorb(flush(schedule, config_.batch_cap, until));
      next_tick = clock_.now_ms() + config_.tick_ms;
    }
  };

  for (const auto& r : trace) {
    pump_until(r.ts_ms);
    clock_.advance_to(r.ts_ms);
    queue_.enqueue(r);
    ++report.enqueued;
  }
  report.acked_during_drive = report.acked;

  if (opts.drain) {
    const auto last_ts = trace.empty() ? clock_.now_ms() : trace.back().ts_ms;
    const auto horizon = last_ts + opts.drain_horizon_ms;
    while (!queue_.empty()) {
      const auto t = schedule.next_up(clock_.now_ms());
      if (!t || *t >= horizon) break;
      clock_.advance_to(*t);
      absorb(flush(schedule, config_.batch_cap, horizon));
      if (clock_.now_ms() >= horizon) break;
    }
  }

  report.remaining = queue_.size();
  report.max_latency_ms = max_latency_ms_;
  return report;
}

}  // namespace podas::agent
