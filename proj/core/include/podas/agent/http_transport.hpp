#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "podas/transport.hpp"

namespace podas::agent {

/// POSTs batches to `<base_url>/api/v1/readings`.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& base_url,
                         std::chrono::milliseconds timeout = std::chrono::seconds(10));
  ~HttpTransport() override;

  DeliveryResult deliver(const ReadingBatch& batch) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace podas::agent
