#pragma once

// HTTP face of the pipeline: submit a sample, poll its status, pull the
// report. Binary payloads travel base64-encoded in the JSON body.

#include <string>
#include <thread>
#include <utility>

#include <json.hpp>

#include "httplib.h"
#include "trapline/core/base64.hpp"
#include "trapline/service/pipeline.hpp"

namespace trapline::service {

inline int http_status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_input:
    case ErrorKind::unsupported: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    default: return 500;
  }
}

class ApiServer {
 public:
  explicit ApiServer(Pipeline& pipeline) : pipeline_(pipeline) { routes(); }
  ~ApiServer() { stop(); }

  // Binds and serves on a background thread; returns the bound port
  // (pass port 0 to take any free one).
  int start(const std::string& host, int port = 0) {
    int bound;
    if (port) {
      bound = server_.bind_to_port(host, port) ? port : -1;
    } else {
      bound = server_.bind_to_any_port(host);
    }
    if (bound <= 0) fail(ErrorKind::network_error, "cannot bind " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  // Blocking serve, for the CLI foreground mode.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void routes() {
    server_.Post("/samples", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object())
          fail(ErrorKind::invalid_input, "body must be a JSON object");
        PayloadKind kind = payload_kind_from_string(j.value("kind", "url"));
        std::string payload;
        if (j.contains("payload_b64")) {
          auto decoded = base64_decode(j.at("payload_b64").get<std::string>());
          if (!decoded) fail(ErrorKind::invalid_input, "payload_b64 is not valid base64");
          payload.assign(decoded->begin(), decoded->end());
        } else {
          payload = j.value("payload", std::string{});
        }
        std::optional<int> duration;
        if (j.contains("exec_duration")) duration = j.at("exec_duration").get<int>();
        std::optional<std::string> argument;
        if (j.contains("exec_argument")) argument = j.at("exec_argument").get<std::string>();
        Source source = source_from_string(j.value("source", "manual"));
        bool force = j.value("force", false);

        Submission sub =
            pipeline_.submit(kind, std::move(payload), duration, argument, source, force);
        nlohmann::json out = sub;
        out.erase("payload_b64");  // no point echoing the bytes back
        res.status = 201;
        res.set_content(out.dump(2), "application/json");
      });
    });

    server_.Get(R"(/samples/([^/]+)/status)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(res, [&] {
                    nlohmann::json out = pipeline_.status(req.matches[1]);
                    res.set_content(out.dump(2), "application/json");
                  });
                });

    server_.Get(R"(/samples/([^/]+)/report)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(res, [&] {
                    auto rep = pipeline_.get_report(req.matches[1]);
                    res.set_content(report::serialize_report(rep), "application/json");
                  });
                });
  }

  template <typename Fn>
  void handle(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      res.status = http_status_for(e.kind());
      nlohmann::json err{{"error", to_string(e.kind())}, {"message", e.what()}};
      res.set_content(err.dump(2), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      nlohmann::json err{{"error", "internal"}, {"message", e.what()}};
      res.set_content(err.dump(2), "application/json");
    }
  }

  Pipeline& pipeline_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace trapline::service
