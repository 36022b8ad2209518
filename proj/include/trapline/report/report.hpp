#pragma once

// Final per-sample report: analyzer fragments merged into one JSON document,
// persisted in a journal store and queryable by hash or botnet.

#include <ctime>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapline/classify/family.hpp"
#include "trapline/core/clock.hpp"
#include "trapline/core/error.hpp"
#include "trapline/core/store.hpp"
#include "trapline/pcap/analyzer.hpp"
#include "trapline/static_analysis/static_analyzer.hpp"
#include "trapline/trace/behavior.hpp"

namespace trapline::report {

struct SampleInfo {
  std::string sha256;
  size_t size = 0;
  std::string cpu_arch;
  std::optional<int> arm_version;

  bool operator==(const SampleInfo&) const = default;
};

struct ExecutionSummary {
  std::string profile_used;  // VM profile name, empty if never executed
  std::string outcome = "failed";  // "ok" or "failed"

  bool operator==(const ExecutionSummary&) const = default;
};

struct AnalysisReport {
  int schema_version = 1;
  SampleInfo sample;
  static_analysis::StaticReport static_report;
  std::optional<trace::BehaviorReport> behavior;
  std::optional<pcap::NetworkReport> network;
  ExecutionSummary execution;
  classify::FamilyVerdict family;
  std::optional<std::string> botnet_id;
  std::vector<std::string> md_urls;
  std::string created_at;
};

// Analyzer outputs waiting to be merged. Only the static fragment is
// mandatory; a sample that never ran cleanly has nothing else.
struct ReportFragments {
  SampleInfo sample;
  std::optional<static_analysis::StaticReport> static_report;
  std::optional<trace::BehaviorReport> behavior;
  std::optional<pcap::NetworkReport> network;
  ExecutionSummary execution;
  classify::FamilyVerdict family{"unclassified", 0};
  std::optional<std::string> botnet_id;
  std::vector<std::string> md_urls;
  std::string created_at;
};

inline AnalysisReport merge_report(const ReportFragments& f) {
  if (!f.static_report)
    fail(ErrorKind::invalid_input, "static analysis fragment is mandatory");
  AnalysisReport r;
  r.sample = f.sample;
  r.static_report = *f.static_report;
  r.execution = f.execution;
  if (r.execution.outcome != "ok") r.execution.outcome = "failed";
  if (r.execution.outcome == "ok") {
    if (!f.behavior || !f.network)
      fail(ErrorKind::invalid_input,
           "successful execution requires behavior and network fragments");
    r.behavior = f.behavior;
    r.network = f.network;
  }
  r.family = f.family;
  r.botnet_id = f.botnet_id;
  std::set<std::string> seen;
  for (const auto& url : f.md_urls)
    if (seen.insert(url).second) r.md_urls.push_back(url);
  r.created_at = f.created_at;
  return r;
}

inline nlohmann::json to_json(const AnalysisReport& r) {
  nlohmann::json sample{{"sha256", r.sample.sha256},
                        {"size", r.sample.size},
                        {"cpu_arch", r.sample.cpu_arch}};
  if (r.sample.arm_version) sample["arm_version"] = *r.sample.arm_version;
  nlohmann::json j{
      {"schema_version", r.schema_version},
      {"sample", std::move(sample)},
      {"static", static_analysis::to_json(r.static_report)},
      {"execution",
       {{"profile_used", r.execution.profile_used}, {"outcome", r.execution.outcome}}},
      {"family", r.family},
      {"md_urls", r.md_urls},
      {"created_at", r.created_at},
  };
  if (r.behavior) j["behavior"] = trace::to_json(*r.behavior);
  if (r.network) j["network"] = pcap::to_json(*r.network);
  if (r.botnet_id) j["botnet_id"] = *r.botnet_id;
  return j;
}

// Structural schema check; merge output always passes, hand-built JSON may not.
inline void validate_report(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      fail(ErrorKind::invalid_input, std::string("report missing key: ") + key);
    return j.at(key);
  };
  if (!need("schema_version").is_number_integer())
    fail(ErrorKind::invalid_input, "schema_version must be an integer");
  const auto& sample = need("sample");
  for (const char* key : {"sha256", "cpu_arch"})
    if (!sample.contains(key) || !sample.at(key).is_string())
      fail(ErrorKind::invalid_input, std::string("sample missing key: ") + key);
  if (!sample.contains("size") || !sample.at("size").is_number())
    fail(ErrorKind::invalid_input, "sample missing key: size");
  if (!need("static").is_object())
    fail(ErrorKind::invalid_input, "static must be an object");
  const auto& exec = need("execution");
  if (!exec.contains("outcome") || !exec.contains("profile_used"))
    fail(ErrorKind::invalid_input, "execution missing outcome or profile_used");
  const bool ok = exec.at("outcome") == "ok";
  if (ok != j.contains("behavior") || ok != j.contains("network"))
    fail(ErrorKind::invalid_input,
         "behavior and network must be present exactly when execution succeeded");
  if (!need("family").is_object() || !j.at("family").contains("family"))
    fail(ErrorKind::invalid_input, "family verdict malformed");
  if (!need("md_urls").is_array())
    fail(ErrorKind::invalid_input, "md_urls must be an array");
  need("created_at");
}

inline std::string serialize_report(const AnalysisReport& r) {
  nlohmann::json j = to_json(r);
  validate_report(j);
  return j.dump(2);
}

inline AnalysisReport report_from_json(const nlohmann::json& j) {
  validate_report(j);
  AnalysisReport r;
  r.schema_version = j.at("schema_version").get<int>();
  const auto& sample = j.at("sample");
  r.sample.sha256 = sample.at("sha256").get<std::string>();
  r.sample.size = sample.at("size").get<size_t>();
  r.sample.cpu_arch = sample.at("cpu_arch").get<std::string>();
  if (sample.contains("arm_version")) r.sample.arm_version = sample.at("arm_version").get<int>();
  r.static_report = static_analysis::static_report_from_json(j.at("static"));
  if (j.contains("behavior")) r.behavior = trace::behavior_report_from_json(j.at("behavior"));
  if (j.contains("network")) r.network = pcap::network_report_from_json(j.at("network"));
  r.execution.profile_used = j.at("execution").at("profile_used").get<std::string>();
  r.execution.outcome = j.at("execution").at("outcome").get<std::string>();
  r.family = j.at("family").get<classify::FamilyVerdict>();
  if (j.contains("botnet_id")) r.botnet_id = j.at("botnet_id").get<std::string>();
  r.md_urls = j.at("md_urls").get<std::vector<std::string>>();
  r.created_at = j.at("created_at").get<std::string>();
  return r;
}

// Journalled report archive keyed by sample hash.
class ReportStore {
 public:
  ReportStore() = default;
  explicit ReportStore(std::filesystem::path path) : store_(std::move(path)) {}

  void save(const AnalysisReport& r) {
    nlohmann::json j = to_json(r);
    validate_report(j);
    store_.put(r.sample.sha256, std::move(j));
  }

  std::optional<AnalysisReport> by_hash(const std::string& sha256) const {
    auto doc = store_.get(sha256);
    if (!doc) return std::nullopt;
    return report_from_json(*doc);
  }

  std::vector<AnalysisReport> by_botnet(const std::string& botnet_id) const {
    std::vector<AnalysisReport> out;
    for (const auto& [key, doc] : store_.all())
      if (doc.value("botnet_id", std::string{}) == botnet_id)
        out.push_back(report_from_json(doc));
    return out;
  }

  std::vector<std::string> hashes() const { return store_.keys(); }
  size_t size() const { return store_.size(); }

 private:
  JsonlStore store_;
};

}  // namespace trapline::report
