#include "podas/server/reading_store.hpp"

namespace podas::server {

void Fnv1a::bytes(const void* data, std::size_t n) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::str(std::string_view s) noexcept {
  i64(static_cast<std::int64_t>(s.size()));
  bytes(s.data(), s.size());
}

bool ReadingStore::insert(const SensorReading& reading) {
  return rows_.try_emplace(key_of(reading), reading).second;
}

bool ReadingStore::contains(const ReadingKey& key) const { return rows_.count(key) != 0; }

std::uint64_t ReadingStore::state_hash() const noexcept {
  Fnv1a h;
  for (const auto& [key, r] : rows_) {
    h.str(key.node_id);
    h.i64(key.seq);
    h.i64(r.ts_ms);
    h.f64(r.pos.lat);
    h.f64(r.pos.lon);
    h.f64(r.ultrasonic_in);
    h.f64(r.accel_z);
  }
  return h.digest();
}

}  // namespace podas::server
