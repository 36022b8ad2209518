#pragma once

// Blacklist of malware-distribution URLs plus the client that pushes them to
// an abuse-reporting service. Failed pushes stay queued for retry.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapline/core/error.hpp"
#include "trapline/core/store.hpp"
#include "trapline/core/url.hpp"

namespace trapline::report {

struct BlacklistEntry {
  std::string url;
  std::string first_seen;
  bool reported = false;
  std::string source_sample_hash;

  bool operator==(const BlacklistEntry&) const = default;
};

inline void to_json(nlohmann::json& j, const BlacklistEntry& e) {
  j = nlohmann::json{{"url", e.url},
                     {"first_seen", e.first_seen},
                     {"reported", e.reported},
                     {"source_sample_hash", e.source_sample_hash}};
}

inline void from_json(const nlohmann::json& j, BlacklistEntry& e) {
  e.url = j.at("url").get<std::string>();
  e.first_seen = j.value("first_seen", std::string{});
  e.reported = j.value("reported", false);
  e.source_sample_hash = j.value("source_sample_hash", std::string{});
}

// Push interface for abuse services. submit() throws on delivery failure.
class AbuseClient {
 public:
  virtual ~AbuseClient() = default;
  virtual void submit(const std::string& url) = 0;
};

// Default client: appends accepted URLs to a local submissions file.
class FileAbuseClient : public AbuseClient {
 public:
  explicit FileAbuseClient(const std::filesystem::path& path) : out_(path, std::ios::app) {
    if (!out_) fail(ErrorKind::io_error, "cannot open submissions file: " + path.string());
  }

  void submit(const std::string& url) override {
    out_ << url << "\n";
    out_.flush();
    if (!out_) fail(ErrorKind::network_error, "submission write failed");
  }

 private:
  std::ofstream out_;
};

// URL blacklist with unique entries and a side list of same-directory listing
// URLs worth probing for sibling samples. Nothing is ever fetched from here.
class BlacklistStore {
 public:
  BlacklistStore() = default;
  explicit BlacklistStore(std::filesystem::path path) : store_(std::move(path)) {}

  bool contains(const std::string& url) const { return store_.contains("url:" + url); }

  void put(const BlacklistEntry& e) { store_.put("url:" + e.url, e); }

  void put_candidate(const std::string& directory_url) {
    store_.put("cand:" + directory_url, directory_url);
  }

  std::vector<BlacklistEntry> entries() const {
    std::vector<BlacklistEntry> out;
    for (const auto& [key, doc] : store_.all())
      if (key.rfind("url:", 0) == 0) out.push_back(doc.get<BlacklistEntry>());
    return out;
  }

  std::vector<std::string> candidates() const {
    std::vector<std::string> out;
    for (const auto& [key, doc] : store_.all())
      if (key.rfind("cand:", 0) == 0) out.push_back(doc.get<std::string>());
    return out;
  }

 private:
  JsonlStore store_;
};

// Records each previously unseen URL, pushes it via the client, and derives
// the serving directory as a sibling-sample candidate. Returns the entries
// created by this call; a failed push is kept with reported=false.
inline std::vector<BlacklistEntry> report_blacklist(const std::vector<std::string>& urls,
                                                    AbuseClient& client, BlacklistStore& store,
                                                    const std::string& source_sample_hash,
                                                    const std::string& now) {
  if (urls.empty()) fail(ErrorKind::invalid_input, "no URLs to report");
  std::vector<BlacklistEntry> out;
  for (const auto& url : urls) {
    if (store.contains(url)) continue;
    BlacklistEntry e{url, now, false, source_sample_hash};
    try {
      client.submit(url);
      e.reported = true;
    } catch (const Error&) {
      e.reported = false;
    }
    store.put(e);
    if (auto parsed = parse_url(url)) {
      Url dir = *parsed;
      dir.path = parsed->directory();
      if (dir.to_string() != url) store.put_candidate(dir.to_string());
    }
    out.push_back(e);
  }
  return out;
}

// Re-pushes everything still marked unreported; returns how many went through.
inline size_t retry_unreported(AbuseClient& client, BlacklistStore& store) {
  size_t delivered = 0;
  for (BlacklistEntry e : store.entries()) {
    if (e.reported) continue;
    try {
      client.submit(e.url);
      e.reported = true;
      store.put(e);
      ++delivered;
    } catch (const Error&) {
    }
  }
  return delivered;
}

}  // namespace trapline::report
