#pragma once

#include <cstdint>
#include <map>

#include "podas/domain.hpp"

namespace podas::server {

/// Readings keyed by (node_id, seq). Re-inserting an existing key is a no-op
/// the caller counts as a duplicate. Durability comes from the service's
/// commit log, which this store is rebuilt from on start-up.
class ReadingStore {
 public:
  /// True when the reading was new.
  bool insert(const SensorReading& reading);
  bool contains(const ReadingKey& key) const;
  std::size_t size() const noexcept { return rows_.size(); }

  /// FNV-1a over the canonical (key-ordered) contents.
  std::uint64_t state_hash() const noexcept;

  const std::map<ReadingKey, SensorReading>& rows() const noexcept { return rows_; }

 private:
  std::map<ReadingKey, SensorReading> rows_;
};

/// Incremental 64-bit FNV-1a.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) noexcept;
  void str(std::string_view s) noexcept;
  void i64(std::int64_t v) noexcept { bytes(&v, sizeof v); }
  void f64(double v) noexcept { bytes(&v, sizeof v); }
  std::uint64_t digest() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace podas::server
