#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "podas/server/ingest_service.hpp"

namespace podas::server {

struct HttpApiOptions {
  /// Static dashboard bundle served under /ui/ when set.
  std::optional<std::filesystem::path> ui_dir;
};

/// Versioned JSON API over an IngestService:
///
///   POST /api/v1/readings            ReadingBatch -> {"accepted","duplicates"}
///   GET  /api/v1/potholes            ?bbox=&since_ms=&min_severity=
///   GET  /api/v1/potholes.geojson    same filters, FeatureCollection
///   GET  /api/v1/stats               ?bucket=day|hour&since_ms=&until_ms=
///   GET|PUT /api/v1/thresholds
///   POST /api/v1/calibrate           {"readings":[...], "k_sigma"?, "severe_delta_in"?}
///   GET  /api/v1/version             {"version"}
///   GET  /api/v1/healthz
///
/// Malformed requests get 400; well-formed requests that violate domain
/// invariants get 422.
class HttpApi {
 public:
  explicit HttpApi(IngestService& service, HttpApiOptions options = {});
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds to host:port; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop(). Requires bind().
  void serve();
  /// Serves on a background thread. Requires bind().
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace podas::server
