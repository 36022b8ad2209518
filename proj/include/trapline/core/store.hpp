#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapline/core/error.hpp"

namespace trapline {

// Append-only JSON-lines store with a latest-wins in-memory view. Each line is
// {"_key": ..., "doc": ...}; rewriting a key appends a new line. On open the
// journal is replayed, so restarts keep state without any compaction step.
class JsonlStore {
 public:
  JsonlStore() = default;

  explicit JsonlStore(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) replay();
    out_.open(path_, std::ios::app);
    if (!out_) fail(ErrorKind::io_error, "cannot open store file: " + path_.string());
  }

  // In-memory only (tests, throwaway pipelines).
  static JsonlStore ephemeral() { return JsonlStore(); }

  void put(const std::string& key, nlohmann::json doc) {
    std::lock_guard lock(mu_);
    if (out_.is_open()) {
      nlohmann::json line = {{"_key", key}, {"doc", doc}};
      out_ << line.dump() << "\n";
      out_.flush();
    }
    docs_[key] = std::move(doc);
  }

  std::optional<nlohmann::json> get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = docs_.find(key);
    if (it == docs_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& key) const {
    std::lock_guard lock(mu_);
    return docs_.count(key) > 0;
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return docs_.size();
  }

  std::vector<std::string> keys() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    out.reserve(docs_.size());
    for (const auto& [k, _] : docs_) out.push_back(k);
    return out;
  }

  // Snapshot of all documents, key-ordered.
  std::vector<std::pair<std::string, nlohmann::json>> all() const {
    std::lock_guard lock(mu_);
    return {docs_.begin(), docs_.end()};
  }

 private:
  void replay() {
    std::ifstream in(path_);
    if (!in) fail(ErrorKind::io_error, "cannot read store file: " + path_.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("_key")) continue;  // torn tail line
      docs_[j["_key"].get<std::string>()] = j["doc"];
    }
  }

  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::mutex mu_;
  std::map<std::string, nlohmann::json> docs_;
};

}  // namespace trapline
