#pragma once

// Reporter layer: every record goes to the append-only attack log, and
// payload-bearing records are submitted to the ingest API. Failed submissions
// stay queued for retry so an API outage loses nothing.

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "httplib.h"
#include "trapline/core/error.hpp"
#include "trapline/core/url.hpp"
#include "trapline/honeypot/records.hpp"

namespace trapline::honeypot {

class SubmitClient {
 public:
  virtual ~SubmitClient() = default;
  // Returns the submission id; throws Error on failure.
  virtual std::string submit(CapturedKind kind, const std::string& payload) = 0;
};

// Speaks the ingest API over HTTP. Endpoint is the API base, e.g.
// http://127.0.0.1:8100
class HttpSubmitClient : public SubmitClient {
 public:
  explicit HttpSubmitClient(const std::string& endpoint) {
    auto url = parse_url(endpoint);
    if (!url) fail(ErrorKind::invalid_input, "bad report endpoint: " + endpoint);
    host_ = url->host;
    port_ = url->effective_port();
  }

  std::string submit(CapturedKind kind, const std::string& payload) override {
    nlohmann::json body{{"kind", kind == CapturedKind::url ? "url" : "hex_string"},
                        {"payload", payload},
                        {"source", "honeypot"}};
    httplib::Client cli(host_, port_);
    auto res = cli.Post("/samples", body.dump(), "application/json");
    if (!res) fail(ErrorKind::network_error, "ingest API unreachable");
    if (res->status != 201)
      fail(ErrorKind::network_error,
           "ingest API rejected the submission: HTTP " + std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("id"))
      fail(ErrorKind::network_error, "ingest API answered without an id");
    return j.at("id").get<std::string>();
  }

 private:
  std::string host_;
  uint16_t port_ = 80;
};

class Reporter {
 public:
  // Empty log path keeps the log in memory only.
  Reporter(std::filesystem::path log_path, std::shared_ptr<SubmitClient> client)
      : log_path_(std::move(log_path)), client_(std::move(client)) {
    if (!log_path_.empty() && log_path_.has_parent_path())
      std::filesystem::create_directories(log_path_.parent_path());
  }

  // Logs the record; submits its payload when it has one. Returns the
  // submission id, or nullopt when there was nothing to submit or the
  // submission failed (the record is then queued for retry).
  std::optional<std::string> report(const AttackRecord& rec) {
    std::lock_guard<std::mutex> lk(mu_);
    nlohmann::json line = to_json(rec);
    if (rec.payload.kind == CapturedKind::none) {
      line["submitted"] = false;
      append(line);
      return std::nullopt;
    }
    try {
      std::string id = client_->submit(rec.payload.kind, rec.payload.value);
      line["submitted"] = true;
      line["submission_id"] = id;
      append(line);
      return id;
    } catch (const Error& e) {
      line["submitted"] = false;
      line["error"] = e.what();
      append(line);
      pending_.push_back(rec);
      return std::nullopt;
    }
  }

  // Resubmits everything that failed. Returns how many went through.
  size_t retry_pending() {
    std::lock_guard<std::mutex> lk(mu_);
    size_t delivered = 0;
    std::vector<AttackRecord> keep;
    for (const auto& rec : pending_) {
      try {
        std::string id = client_->submit(rec.payload.kind, rec.payload.value);
        nlohmann::json line = to_json(rec);
        line["submitted"] = true;
        line["submission_id"] = id;
        line["retry"] = true;
        append(line);
        delivered++;
      } catch (const Error&) {
        keep.push_back(rec);
      }
    }
    pending_ = std::move(keep);
    return delivered;
  }

  size_t pending() const {
    std::lock_guard<std::mutex> lk(mu_);
    return pending_.size();
  }

  // Lines appended so far, oldest first (reads the log back from disk).
  std::vector<nlohmann::json> log_lines() const {
    std::lock_guard<std::mutex> lk(mu_);
    return lines_;
  }

 private:
  void append(const nlohmann::json& line) {
    lines_.push_back(line);
    if (log_path_.empty()) return;
    std::ofstream out(log_path_, std::ios::app);
    out << line.dump() << "\n";
  }

  std::filesystem::path log_path_;
  std::shared_ptr<SubmitClient> client_;
  mutable std::mutex mu_;
  std::vector<AttackRecord> pending_;
  std::vector<nlohmann::json> lines_;
};

}  // namespace trapline::honeypot
