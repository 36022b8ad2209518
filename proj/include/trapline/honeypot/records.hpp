#pragma once

// Attack records and per-service configuration for the capture honeypots.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trapline/core/error.hpp"

namespace trapline::honeypot {

// The simulated services. Telnet gets a real session emulator; the rest share
// one HTTP exploit responder parameterized by these presets. The ADB protocol
// is binary and stays out of scope, but its conventional port is listed so a
// deployment manifest can name it.
enum class HoneypotKind {
  telnet,
  adb,
  jaws,
  dlink,
  realtek,
  gpon,
  huawei,
  netgear,
  hadoop_yarn,
};

inline const char* to_string(HoneypotKind k) {
  switch (k) {
    case HoneypotKind::telnet: return "telnet";
    case HoneypotKind::adb: return "adb";
    case HoneypotKind::jaws: return "jaws";
    case HoneypotKind::dlink: return "dlink";
    case HoneypotKind::realtek: return "realtek";
    case HoneypotKind::gpon: return "gpon";
    case HoneypotKind::huawei: return "huawei";
    case HoneypotKind::netgear: return "netgear";
    case HoneypotKind::hadoop_yarn: return "hadoop_yarn";
  }
  return "telnet";
}

inline HoneypotKind honeypot_kind_from_string(std::string_view s) {
  if (s == "telnet") return HoneypotKind::telnet;
  if (s == "adb") return HoneypotKind::adb;
  if (s == "jaws") return HoneypotKind::jaws;
  if (s == "dlink") return HoneypotKind::dlink;
  if (s == "realtek") return HoneypotKind::realtek;
  if (s == "gpon") return HoneypotKind::gpon;
  if (s == "huawei") return HoneypotKind::huawei;
  if (s == "netgear") return HoneypotKind::netgear;
  if (s == "hadoop_yarn") return HoneypotKind::hadoop_yarn;
  fail(ErrorKind::invalid_input, "unknown honeypot kind: " + std::string(s));
}

inline uint16_t default_port(HoneypotKind k) {
  switch (k) {
    case HoneypotKind::telnet: return 23;  // 2323 is the usual alternate
    case HoneypotKind::adb: return 5555;
    case HoneypotKind::jaws: return 60001;
    case HoneypotKind::dlink: return 49152;
    case HoneypotKind::realtek: return 52869;
    case HoneypotKind::gpon: return 8080;
    case HoneypotKind::huawei: return 37215;
    case HoneypotKind::netgear: return 80;
    case HoneypotKind::hadoop_yarn: return 8088;
  }
  return 23;
}

enum class CapturedKind { none, url, hex_script };

inline const char* to_string(CapturedKind k) {
  switch (k) {
    case CapturedKind::none: return "none";
    case CapturedKind::url: return "url";
    case CapturedKind::hex_script: return "hex_script";
  }
  return "none";
}

inline CapturedKind captured_kind_from_string(std::string_view s) {
  if (s == "none") return CapturedKind::none;
  if (s == "url") return CapturedKind::url;
  if (s == "hex_script") return CapturedKind::hex_script;
  fail(ErrorKind::invalid_input, "unknown payload kind: " + std::string(s));
}

struct CapturedPayload {
  CapturedKind kind = CapturedKind::none;
  std::string value;  // the URL text or the raw echo-command script
};

struct HttpRequestInfo {
  std::string method;
  std::string uri;
  std::string user_agent;
};

struct CredentialPair {
  std::string user;
  std::string password;
};

struct AttackRecord {
  std::string honeypot_kind;
  std::string attacker_ip;
  uint16_t attacker_port = 0;
  std::string timestamp;
  CapturedPayload payload;
  std::optional<HttpRequestInfo> http_request;
  std::optional<CredentialPair> credentials;
};

inline nlohmann::json to_json(const AttackRecord& r) {
  nlohmann::json j{{"honeypot_kind", r.honeypot_kind},
                   {"attacker_ip", r.attacker_ip},
                   {"attacker_port", r.attacker_port},
                   {"timestamp", r.timestamp},
                   {"payload", {{"kind", to_string(r.payload.kind)}, {"value", r.payload.value}}}};
  if (r.http_request)
    j["http_request"] = {{"method", r.http_request->method},
                         {"uri", r.http_request->uri},
                         {"user_agent", r.http_request->user_agent}};
  if (r.credentials)
    j["credentials"] = {{"user", r.credentials->user},
                        {"password", r.credentials->password}};
  return j;
}

inline AttackRecord attack_record_from_json(const nlohmann::json& j) {
  AttackRecord r;
  r.honeypot_kind = j.at("honeypot_kind").get<std::string>();
  r.attacker_ip = j.at("attacker_ip").get<std::string>();
  r.attacker_port = j.at("attacker_port").get<uint16_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.payload.kind = captured_kind_from_string(j.at("payload").at("kind").get<std::string>());
  r.payload.value = j.at("payload").at("value").get<std::string>();
  if (j.contains("http_request")) {
    const auto& h = j.at("http_request");
    r.http_request = HttpRequestInfo{h.at("method").get<std::string>(),
                                     h.at("uri").get<std::string>(),
                                     h.at("user_agent").get<std::string>()};
  }
  if (j.contains("credentials")) {
    const auto& c = j.at("credentials");
    r.credentials = CredentialPair{c.at("user").get<std::string>(),
                                   c.at("password").get<std::string>()};
  }
  return r;
}

struct HoneypotConfig {
  HoneypotKind kind = HoneypotKind::telnet;
  uint16_t listen_port = 23;
  std::string banner;
  std::string hostname;
  std::vector<std::string> accepted_credentials;  // "user:password" entries
  std::string report_endpoint;                    // ingest API base URL
  int session_timeout_sec = 120;
};

// Default deployment settings per service. Banner and hostname are meant to be
// overridden per instance so no two deployments answer byte-identically.
inline HoneypotConfig honeypot_preset(HoneypotKind k) {
  HoneypotConfig cfg;
  cfg.kind = k;
  cfg.listen_port = default_port(k);
  switch (k) {
    case HoneypotKind::telnet:
      cfg.banner = "BusyBox v1.22.1 (2014-05-12 18:34:25 UTC) built-in shell (ash)";
      cfg.hostname = "dvrdvs";
      cfg.accepted_credentials = {"root:root",    "root:admin", "admin:admin",
                                  "root:xc3511",  "root:vizxv", "root:888888",
                                  "root:default", "support:support"};
      break;
    case HoneypotKind::adb:
      cfg.banner = "";
      cfg.hostname = "android";
      break;
    case HoneypotKind::jaws:
      cfg.banner = "JAWS/1.0";
      cfg.hostname = "dvr";
      break;
    case HoneypotKind::dlink:
      cfg.banner = "Linux, UPnP/1.0, DIR-850L Ver 1.14";
      cfg.hostname = "dlinkrouter";
      break;
    case HoneypotKind::realtek:
      cfg.banner = "RTL81xx UPnP/1.0 miniupnpd/1.0";
      cfg.hostname = "realtek";
      break;
    case HoneypotKind::gpon:
      cfg.banner = "Mini web server 1.0 ZTE corp 2005.";
      cfg.hostname = "gpon-home";
      break;
    case HoneypotKind::huawei:
      cfg.banner = "HuaweiHomeGateway";
      cfg.hostname = "homegateway";
      break;
    case HoneypotKind::netgear:
      cfg.banner = "DGN1000 uhttpd/1.0.0";
      cfg.hostname = "netgear";
      break;
    case HoneypotKind::hadoop_yarn:
      cfg.banner = "Jetty(6.1.26)";
      cfg.hostname = "yarn-master";
      break;
  }
  return cfg;
}

}  // namespace trapline::honeypot
