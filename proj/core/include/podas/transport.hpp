#pragma once

#include <string>

#include "podas/codec.hpp"

namespace podas {

struct DeliveryResult {
  enum class Status {
    Acked,             // committed by the server
    Rejected,          // 4xx: the server will never accept this batch
    TransportFailure,  // network error or 5xx: retry the same batch
  };
  Status status = Status::TransportFailure;
  IngestResult ack;
  int http_status = 0;
  std::string detail;

  static DeliveryResult acked(IngestResult r) { return {Status::Acked, r, 200, {}}; }
  static DeliveryResult rejected(int code, std::string why) {
    return {Status::Rejected, {}, code, std::move(why)};
  }
  static DeliveryResult failed(std::string why, int code = 0) {
    return {Status::TransportFailure, {}, code, std::move(why)};
  }
};

/// Uplink from a node agent to the ingestion server.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual DeliveryResult deliver(const ReadingBatch& batch) = 0;
};

}  // namespace podas
