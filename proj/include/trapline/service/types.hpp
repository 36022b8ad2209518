#pragma once

// Submission and status records shared by the pipeline, the HTTP API, and the
// CLI verbs.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trapline/core/base64.hpp"
#include "trapline/core/error.hpp"

namespace trapline::service {

enum class PayloadKind { url, elf_bytes, hex_string };

inline const char* to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::url: return "url";
    case PayloadKind::elf_bytes: return "elf_bytes";
    default: return "hex_string";
  }
}

inline PayloadKind payload_kind_from_string(std::string_view s) {
  if (s == "url") return PayloadKind::url;
  if (s == "elf_bytes") return PayloadKind::elf_bytes;
  if (s == "hex_string") return PayloadKind::hex_string;
  fail(ErrorKind::invalid_input, "unknown payload kind: " + std::string(s));
}

enum class Source { honeypot, manual, dropper_resubmission };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::honeypot: return "honeypot";
    case Source::dropper_resubmission: return "dropper_resubmission";
    default: return "manual";
  }
}

inline Source source_from_string(std::string_view s) {
  if (s == "honeypot") return Source::honeypot;
  if (s == "manual") return Source::manual;
  if (s == "dropper_resubmission") return Source::dropper_resubmission;
  fail(ErrorKind::invalid_input, "unknown source: " + std::string(s));
}

enum class State { queued, parsing, executing, analyzing, done, failed };

inline const char* to_string(State s) {
  switch (s) {
    case State::queued: return "queued";
    case State::parsing: return "parsing";
    case State::executing: return "executing";
    case State::analyzing: return "analyzing";
    case State::done: return "done";
    default: return "failed";
  }
}

inline State state_from_string(std::string_view s) {
  if (s == "queued") return State::queued;
  if (s == "parsing") return State::parsing;
  if (s == "executing") return State::executing;
  if (s == "analyzing") return State::analyzing;
  if (s == "done") return State::done;
  if (s == "failed") return State::failed;
  fail(ErrorKind::invalid_input, "unknown state: " + std::string(s));
}

// The executing/analyzing leg is optional: a submission that produced no
// runnable binary settles straight out of parsing.
inline bool legal_transition(State from, State to) {
  switch (from) {
    case State::queued: return to == State::parsing;
    case State::parsing:
      return to == State::executing || to == State::done || to == State::failed;
    case State::executing: return to == State::analyzing;
    case State::analyzing: return to == State::done || to == State::failed;
    default: return false;  // done and failed are terminal
  }
}

struct Submission {
  std::string id;
  PayloadKind payload_kind = PayloadKind::url;
  std::string payload;  // URL text, hex script text, or raw ELF bytes
  std::optional<int> exec_duration;
  std::optional<std::string> exec_argument;
  Source source = Source::manual;
  std::string received_at;
  int depth = 0;  // resubmission chain length, capped
  bool force = false;  // reanalyze even when the hash is already known
};

inline void to_json(nlohmann::json& j, const Submission& s) {
  j = nlohmann::json{{"id", s.id},
                     {"payload_kind", to_string(s.payload_kind)},
                     // raw ELF payloads are not valid UTF-8, so the journal
                     // carries every payload base64-encoded
                     {"payload_b64", base64_encode(std::span<const uint8_t>(
                                         reinterpret_cast<const uint8_t*>(s.payload.data()),
                                         s.payload.size()))},
                     {"source", to_string(s.source)},
                     {"received_at", s.received_at},
                     {"depth", s.depth},
                     {"force", s.force}};
  if (s.exec_duration) j["exec_duration"] = *s.exec_duration;
  if (s.exec_argument) j["exec_argument"] = *s.exec_argument;
}

inline void from_json(const nlohmann::json& j, Submission& s) {
  s.id = j.at("id").get<std::string>();
  s.payload_kind = payload_kind_from_string(j.at("payload_kind").get<std::string>());
  auto decoded = base64_decode(j.at("payload_b64").get<std::string>());
  if (!decoded) fail(ErrorKind::invalid_input, "submission payload_b64 is not valid base64");
  s.payload.assign(decoded->begin(), decoded->end());
  if (j.contains("exec_duration")) s.exec_duration = j.at("exec_duration").get<int>();
  if (j.contains("exec_argument")) s.exec_argument = j.at("exec_argument").get<std::string>();
  s.source = source_from_string(j.value("source", "manual"));
  s.received_at = j.value("received_at", std::string{});
  s.depth = j.value("depth", 0);
  s.force = j.value("force", false);
}

struct AnalysisStatus {
  std::string submission_id;
  State state = State::queued;
  std::optional<std::string> failure_reason;
  std::string sample_sha256;  // set once parsing pinned the binary
  std::vector<std::string> history;  // every state entered, in order
};

inline void to_json(nlohmann::json& j, const AnalysisStatus& s) {
  j = nlohmann::json{{"submission_id", s.submission_id},
                     {"state", to_string(s.state)},
                     {"history", s.history}};
  if (s.failure_reason) j["failure_reason"] = *s.failure_reason;
  if (!s.sample_sha256.empty()) j["sample_sha256"] = s.sample_sha256;
}

inline void from_json(const nlohmann::json& j, AnalysisStatus& s) {
  s.submission_id = j.at("submission_id").get<std::string>();
  s.state = state_from_string(j.at("state").get<std::string>());
  if (j.contains("failure_reason")) s.failure_reason = j.at("failure_reason").get<std::string>();
  s.sample_sha256 = j.value("sample_sha256", std::string{});
  s.history = j.value("history", std::vector<std::string>{});
}

}  // namespace trapline::service
