#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <thread>

namespace podas::agent {

/// Millisecond clock the agent schedules against. Tests drive a
/// SimulatedClock so connectivity churn is reproducible.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  virtual void sleep_ms(std::int64_t ms) = 0;
  /// Waits until `t_ms`; no-op when that time has already passed.
  virtual void advance_to(std::int64_t t_ms) = 0;
};

class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override { return now_; }
  void sleep_ms(std::int64_t ms) override { now_ += std::max<std::int64_t>(ms, 0); }
  void advance_to(std::int64_t t_ms) override { now_ = std::max(now_, t_ms); }

 private:
  std::int64_t now_;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
  void sleep_ms(std::int64_t ms) override {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
  void advance_to(std::int64_t t_ms) override { sleep_ms(t_ms - now_ms()); }
};

}  // namespace podas::agent
