#pragma once

// Family naming from AV scan results. Labels are tokenized, generic vocabulary
// is dropped, and the plurality token across engines becomes the family name.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trapline/core/error.hpp"
#include "trapline/core/ruleset.hpp"
#include <json.hpp>

namespace trapline::classify {

struct AvVerdict {
  std::string engine;
  std::string label;  // empty or "benign" means the engine saw nothing

  bool malicious() const {
    return !label.empty() && label != "benign";
  }

  bool operator==(const AvVerdict&) const = default;
};

struct AvScan {
  std::string sample_hash;
  std::vector<AvVerdict> verdicts;

  size_t positives() const {
    return static_cast<size_t>(
        std::count_if(verdicts.begin(), verdicts.end(),
                      [](const AvVerdict& v) { return v.malicious(); }));
  }
};

inline void to_json(nlohmann::json& j, const AvVerdict& v) {
  j = nlohmann::json{{"engine", v.engine}, {"label", v.label}};
}

inline void from_json(const nlohmann::json& j, AvVerdict& v) {
  v.engine = j.at("engine").get<std::string>();
  v.label = j.value("label", std::string{});
}

inline void to_json(nlohmann::json& j, const AvScan& s) {
  j = nlohmann::json{{"sample_hash", s.sample_hash},
                     {"verdicts", s.verdicts},
                     {"positives", s.positives()}};
}

inline void from_json(const nlohmann::json& j, AvScan& s) {
  s.sample_hash = j.at("sample_hash").get<std::string>();
  s.verdicts = j.value("verdicts", std::vector<AvVerdict>{});
}

// Scan source. The file-backed client reads a JSON object mapping sample
// hashes to verdict arrays, which is how recorded scans are replayed.
class AvClient {
 public:
  virtual ~AvClient() = default;
  virtual std::optional<AvScan> scan(const std::string& sha256) = 0;
};

class FileAvClient : public AvClient {
 public:
  explicit FileAvClient(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io_error, "cannot open AV fixture: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(ErrorKind::invalid_input, "AV fixture is not a JSON object: " + path);
    for (auto& [hash, verdicts] : j.items())
      table_[hash] = verdicts.get<std::vector<AvVerdict>>();
  }

  std::optional<AvScan> scan(const std::string& sha256) override {
    auto it = table_.find(sha256);
    if (it == table_.end()) return std::nullopt;
    return AvScan{sha256, it->second};
  }

 private:
  std::map<std::string, std::vector<AvVerdict>> table_;
};

// Family verdict for one sample. `family` is either a concrete name,
// "unclassified" (no usable tokens) or "singleton" (no token seen twice).
struct FamilyVerdict {
  std::string family;
  size_t support = 0;

  bool operator==(const FamilyVerdict&) const = default;
};

inline void to_json(nlohmann::json& j, const FamilyVerdict& v) {
  j = nlohmann::json{{"family", v.family}, {"support", v.support}};
}

inline void from_json(const nlohmann::json& j, FamilyVerdict& v) {
  v.family = j.at("family").get<std::string>();
  v.support = j.value("support", size_t{0});
}

namespace detail {

// Label -> candidate family tokens: lowercase alphanumeric runs with the
// generic vocabulary and bare numbers removed.
inline std::vector<std::string> label_tokens(std::string_view label,
                                             const Ruleset& generic) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 3 &&
        !std::all_of(cur.begin(), cur.end(),
                     [](unsigned char c) { return std::isdigit(c); }) &&
        !generic.contains(cur))
      out.push_back(cur);
    cur.clear();
  };
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)))
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    else
      flush();
  }
  flush();
  return out;
}

}  // namespace detail

// Plurality vote over engine labels. Each engine supports a token at most
// once, so "Mirai.Mirai.Gen" still counts as one vote for mirai.
inline FamilyVerdict classify_family(const AvScan& scan,
                                     const Ruleset& generic = defaults::generic_labels()) {
  std::map<std::string, size_t> votes;
  for (const AvVerdict& v : scan.verdicts) {
    if (!v.malicious()) continue;
    std::set<std::string> seen;
    for (auto& tok : detail::label_tokens(v.label, generic))
      if (seen.insert(tok).second) ++votes[tok];
  }
  if (votes.empty()) return {"unclassified", 0};

  // std::map iterates in key order, so on a support tie the lexicographically
  // smallest token wins.
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;
  if (best->second < 2) return {"singleton", 1};
  return {best->first, best->second};
}

// Botnet-level verdict: agreement among the classified members names the
// botnet, disagreement is "mixed", and no classified member at all is
// "unclassified". Singletons carry no name and count as unclassified here.
inline std::string classify_botnet(const std::vector<FamilyVerdict>& members) {
  std::set<std::string> families;
  for (const FamilyVerdict& m : members)
    if (m.family != "unclassified" && m.family != "singleton") families.insert(m.family);
  if (families.empty()) return "unclassified";
  if (families.size() == 1) return *families.begin();
  return "mixed";
}

}  // namespace trapline::classify
