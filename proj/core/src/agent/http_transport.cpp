#include "podas/agent/http_transport.hpp"

#include <httplib.h>

namespace podas::agent {

struct HttpTransport::Impl {
  explicit Impl(const std::string& url) : client(url) {}
  httplib::Client client;
};

HttpTransport::HttpTransport(const std::string& base_url, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(base_url)) {
  if (!impl_->client.is_valid()) throw ValidationError("invalid server URL: " + base_url);
  impl_->client.set_connection_timeout(timeout);
  impl_->client.set_read_timeout(timeout);
  impl_->client.set_write_timeout(timeout);
}

HttpTransport::~HttpTransport() = default;

DeliveryResult HttpTransport::deliver(const ReadingBatch& batch) {
  const auto body = json(batch).dump();
  auto res = impl_->client.Post("/api/v1/readings", body, "application/json");
  if (!res) return DeliveryResult::failed(httplib::to_string(res.error()));
  if (res->status == 200) {
    try {
      return DeliveryResult::acked(json::parse(res->body).get<IngestResult>());
    } catch (const std::exception& e) {
      return DeliveryResult::failed(std::string("unreadable acknowledgment: ") + e.what(), 200);
    }
  }
  if (res->status >= 400 && res->status < 500) {
    return DeliveryResult::rejected(res->status, res->body);
  }
  return DeliveryResult::failed("server returned " + std::to_string(res->status), res->status);
}

}  // namespace podas::agent
