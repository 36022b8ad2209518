#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "trapline/core/error.hpp"

namespace trapline {

// Every numeric knob in the analyzers lives here so tests and deployments can
// override them from one JSON file. Defaults are the shipped behaviour.
struct Thresholds {
  // static analysis
  double packed_entropy = 6.8;      // bits/byte above which a sample counts as packed

  // transport-layer heuristics
  double scan_ratio = 0.20;         // established/hosts below this => scan
  size_t scan_min_hosts = 10;       // per-port floor before a scan can fire
  size_t p2p_min_c2 = 5;            // more than this many C2 peers => P2P
  uint64_t ack_flood_factor = 100;  // acks >= factor * max(1, syns)
  uint64_t udp_flood_factor = 100;  // sent >= factor * max(1, received)
  uint64_t udp_flood_min = 1000;    // and at least this many datagrams
  uint64_t syn_flood_min = 1000;    // SYNs to one host

  // execution judgement
  size_t exec_min_events = 5;       // fewer parsed events => failed run
  size_t exec_restart_run = 10;     // consecutive restart_syscall => failed run

  // shell-script loop emulation
  size_t loop_iteration_cap = 10000;
  size_t loop_url_cap = 1000;

  // URL fetching
  int fetch_timeout_sec = 30;
  size_t fetch_max_bytes = 32ull * 1024 * 1024;
  size_t fetch_max_redirects = 5;

  // pipeline
  int default_exec_duration_sec = 60;
  int resubmission_depth_cap = 3;

  static Thresholds load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io_error, "cannot open thresholds file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);
    Thresholds t;
    t.apply(j);
    return t;
  }

  void apply(const nlohmann::json& j) {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("packed_entropy", packed_entropy);
    get("scan_ratio", scan_ratio);
    get("scan_min_hosts", scan_min_hosts);
    get("p2p_min_c2", p2p_min_c2);
    get("ack_flood_factor", ack_flood_factor);
    get("udp_flood_factor", udp_flood_factor);
    get("udp_flood_min", udp_flood_min);
    get("syn_flood_min", syn_flood_min);
    get("exec_min_events", exec_min_events);
    get("exec_restart_run", exec_restart_run);
    get("loop_iteration_cap", loop_iteration_cap);
    get("loop_url_cap", loop_url_cap);
    get("fetch_timeout_sec", fetch_timeout_sec);
    get("fetch_max_bytes", fetch_max_bytes);
    get("fetch_max_redirects", fetch_max_redirects);
    get("default_exec_duration_sec", default_exec_duration_sec);
    get("resubmission_depth_cap", resubmission_depth_cap);
  }

  nlohmann::json to_json() const {
    return {
        {"packed_entropy", packed_entropy},
        {"scan_ratio", scan_ratio},
        {"scan_min_hosts", scan_min_hosts},
        {"p2p_min_c2", p2p_min_c2},
        {"ack_flood_factor", ack_flood_factor},
        {"udp_flood_factor", udp_flood_factor},
        {"udp_flood_min", udp_flood_min},
        {"syn_flood_min", syn_flood_min},
        {"exec_min_events", exec_min_events},
        {"exec_restart_run", exec_restart_run},
        {"loop_iteration_cap", loop_iteration_cap},
        {"loop_url_cap", loop_url_cap},
        {"fetch_timeout_sec", fetch_timeout_sec},
        {"fetch_max_bytes", fetch_max_bytes},
        {"fetch_max_redirects", fetch_max_redirects},
        {"default_exec_duration_sec", default_exec_duration_sec},
        {"resubmission_depth_cap", resubmission_depth_cap},
    };
  }
};

}  // namespace trapline
