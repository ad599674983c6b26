#include "podas/server/http_api.hpp"

#include <httplib.h>

#include <charconv>
#include <thread>

namespace podas::server {
namespace {

class BadRequest : public Error {
 public:
  using Error::Error;
};

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 json extra = json::object()) {
  extra["error"] = message;
  reply(res, status, extra);
}

std::int64_t parse_int(const std::string& name, const std::string& text) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end) throw BadRequest(name + " must be an integer");
  return v;
}

PotholeFilter parse_filter(const httplib::Request& req) {
  PotholeFilter f;
  if (req.has_param("bbox") && !req.get_param_value("bbox").empty()) {
    f.bbox = parse_bbox(req.get_param_value("bbox"));
    if (!f.bbox) throw BadRequest("bbox must be min_lon,min_lat,max_lon,max_lat with min <= max");
  }
  if (req.has_param("since_ms") && !req.get_param_value("since_ms").empty()) {
    f.since_ms = parse_int("since_ms", req.get_param_value("since_ms"));
  }
  if (req.has_param("min_severity") && !req.get_param_value("min_severity").empty()) {
    f.min_severity = parse_severity(req.get_param_value("min_severity"));
    if (!f.min_severity) throw BadRequest("unknown min_severity");
  }
  return f;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string("malformed JSON body: ") + e.what());
  }
}

// Runs a handler, mapping exceptions onto status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const BadRequest& e) {
    reply_error(res, 400, e.what());
  } catch (const FormatError& e) {
    reply_error(res, 400, e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, e.what());
  } catch (const BatchRejectedError& e) {
    reply_error(res, 422, e.what(), json{{"offending_seqs", e.offending_seqs()}});
  } catch (const ValidationError& e) {
    reply_error(res, 422, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

struct HttpApi::Impl {
  Impl(IngestService& s, HttpApiOptions o) : service(s), options(std::move(o)) {}

  IngestService& service;
  HttpApiOptions options;
  httplib::Server http;
  std::thread worker;
  bool bound = false;
};

HttpApi::HttpApi(IngestService& service, HttpApiOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& svc = impl_->service;
  auto& http = impl_->http;

  http.Post("/api/v1/readings", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto batch = parse_body(req).get<ReadingBatch>();
      reply(res, 200, svc.ingest_batch(batch));
    });
  });

  http.Get("/api/v1/potholes", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, json(svc.get_potholes(parse_filter(req)))); });
  });

  http.Get("/api/v1/potholes.geojson",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               res.status = 200;
               res.set_content(svc.export_geojson(parse_filter(req)).dump(),
                               "application/geo+json");
             });
           });

  http.Get("/api/v1/stats", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto name = req.has_param("bucket") ? req.get_param_value("bucket") : "day";
      const auto bucket = parse_bucket(name);
      if (!bucket) throw BadRequest("bucket must be day or hour");
      std::optional<std::int64_t> since;
      std::optional<std::int64_t> until;
      if (req.has_param("since_ms")) since = parse_int("since_ms", req.get_param_value("since_ms"));
      if (req.has_param("until_ms")) until = parse_int("until_ms", req.get_param_value("until_ms"));
      std::vector<StatsBucket> series;
      try {
        series = svc.get_stats(*bucket, since, until);
      } catch (const ValidationError& e) {
        throw BadRequest(e.what());
      }
      json out = json::array();
      for (const auto& b : series) {
        out.push_back({{"bucket_start_ms", b.bucket_start_ms},
                       {"new_events", b.new_events},
                       {"new_readings", b.new_readings}});
      }
      reply(res, 200, out);
    });
  });

  http.Get("/api/v1/thresholds", [&svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, svc.get_thresholds()); });
  });

  http.Put("/api/v1/thresholds", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto t = parse_body(req).get<detection::Thresholds>();
      svc.put_thresholds(t);
      reply(res, 200, svc.get_thresholds());
    });
  });

  http.Post("/api/v1/calibrate", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      detection::CalibrationOptions opts;
      opts.k_sigma = body.value("k_sigma", opts.k_sigma);
      opts.severe_delta_in = body.value("severe_delta_in", opts.severe_delta_in);
      std::vector<SensorReading> readings;
      for (const auto& r : body.at("readings")) {
        readings.push_back(reading_from_wire(r, r.value("node_id", std::string("calibration"))));
      }
      try {
        reply(res, 200, svc.post_calibrate(readings, opts));
      } catch (const detection::TooFewReadingsError& e) {
        throw ValidationError(e.what());
      }
    });
  });

  http.Get("/api/v1/version", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"version", svc.version()}});
  });

  http.Get("/api/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"status", "ok"}});
  });

  if (impl_->options.ui_dir) {
    if (!http.set_mount_point("/ui", impl_->options.ui_dir->string())) {
      throw Error("dashboard directory not found: " + impl_->options.ui_dir->string());
    }
  }
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (!impl_->http.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpApi::serve() {
  if (!impl_->bound) throw Error("HttpApi::serve called before bind");
  impl_->http.listen_after_bind();
}

void HttpApi::start() {
  if (!impl_->bound) throw Error("HttpApi::start called before bind");
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

void HttpApi::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace podas::server
