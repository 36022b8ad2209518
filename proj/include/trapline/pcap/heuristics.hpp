#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trapline/core/config.hpp"
#include "trapline/pcap/flows.hpp"

namespace trapline::pcap {

struct ScanFinding {
  uint16_t port = 0;
  std::string kind;  // "syn" or "fin"
  size_t hosts_scanned = 0;

  auto operator<=>(const ScanFinding&) const = default;
};

struct C2Finding {
  std::string host;
  uint16_t port = 0;
  std::string protocol = "tcp";

  auto operator<=>(const C2Finding&) const = default;
};

struct DdosFinding {
  std::string victim;
  std::optional<uint16_t> port;
  std::string kind;  // "syn_flood" | "ack_flood" | "udp_flood"

  bool operator==(const DdosFinding&) const = default;
};

namespace detail {

// Per-port connection summary across TCP flows. The established/initiated
// ratio partitions a port between scanning (low) and C2 (high), so the two
// labels can never land on the same port.
struct PortSummary {
  size_t initiated = 0;    // flows that sent at least one SYN
  size_t established = 0;  // flows that completed a handshake
  std::set<std::string> hosts_synned;
  std::set<std::string> hosts_probed;  // SYN or FIN sent
  std::set<std::string> hosts_established;
  uint64_t fin_sum = 0;
  uint64_t synack_sum = 0;

  double ratio() const {
    return initiated ? static_cast<double>(established) / static_cast<double>(initiated) : 0.0;
  }
};

inline std::map<uint16_t, PortSummary> summarize_ports(const FlowTable& flows) {
  std::map<uint16_t, PortSummary> out;
  for (const auto& [key, st] : flows.flows) {
    if (key.protocol != kProtoTcp) continue;
    auto& s = out[key.remote_port];
    if (st.syn_sent >= 1) {
      s.initiated++;
      s.hosts_synned.insert(key.remote_host);
    }
    if (st.syn_sent >= 1 || st.fin_sent >= 1) s.hosts_probed.insert(key.remote_host);
    if (st.established) {
      s.established++;
      s.hosts_established.insert(key.remote_host);
    }
    s.fin_sum += st.fin_sent;
    s.synack_sum += st.synack_recv;
  }
  return out;
}

}  // namespace detail

// A port is being scanned when at least `scan_min_hosts` distinct hosts were
// probed there and the completion ratio stays under `scan_ratio`. FIN scans
// show up as FINs outnumbering SYN-ACKs on the port.
inline std::vector<ScanFinding> detect_scans(const FlowTable& flows,
                                             const Thresholds& th = Thresholds{}) {
  std::vector<ScanFinding> out;
  for (const auto& [port, s] : detail::summarize_ports(flows)) {
    if (s.ratio() >= th.scan_ratio) continue;
    if (s.hosts_synned.size() >= th.scan_min_hosts)
      out.push_back({port, "syn", s.hosts_synned.size()});
    if (s.hosts_probed.size() >= th.scan_min_hosts && s.fin_sum > s.synack_sum)
      out.push_back({port, "fin", s.hosts_probed.size()});
  }
  return out;
}

// Ports whose completion ratio reaches `scan_ratio` are command channels; the
// hosts that completed handshakes there are the C2 peers. Packet volume is
// deliberately ignored. More than `p2p_min_c2` distinct peers means the
// sample talks to a mesh rather than a single controller.
inline std::pair<std::vector<C2Finding>, bool> detect_c2(const FlowTable& flows,
                                                         const Thresholds& th = Thresholds{}) {
  std::vector<C2Finding> out;
  for (const auto& [port, s] : detail::summarize_ports(flows)) {
    if (s.initiated == 0 || s.ratio() < th.scan_ratio) continue;
    for (const auto& host : s.hosts_established) out.push_back({host, port, "tcp"});
  }
  bool p2p = out.size() > th.p2p_min_c2;
  return {std::move(out), p2p};
}

// Flood detection over per-victim aggregates. ACK floods are ACKs far out of
// proportion to SYNs toward one host:port; SYN and UDP floods are sheer
// volume, the latter also requiring sends to dwarf replies. A spoofed flood
// is any traffic sent from an address that is not the sandbox's.
inline std::pair<std::vector<DdosFinding>, bool> detect_ddos(const FlowTable& flows,
                                                             const Thresholds& th = Thresholds{}) {
  struct Agg {
    uint64_t syn = 0, ack = 0, udp_sent = 0, udp_recv = 0;
  };
  std::map<std::pair<std::string, uint16_t>, Agg> per_target;
  for (const auto& [key, st] : flows.flows) {
    auto& a = per_target[{key.remote_host, key.remote_port}];
    a.syn += st.syn_sent;
    a.ack += st.ack_sent;
    a.udp_sent += st.udp_sent;
    a.udp_recv += st.udp_recv;
  }

  std::vector<DdosFinding> out;
  std::map<std::string, uint64_t> syn_per_host;
  std::set<std::string> syn_flood_hosts;
  for (const auto& [target, a] : per_target) {
    const auto& [host, port] = target;
    if (a.ack >= th.ack_flood_factor * std::max<uint64_t>(1, a.syn))
      out.push_back({host, port, "ack_flood"});
    if (a.syn >= th.syn_flood_min) {
      out.push_back({host, port, "syn_flood"});
      syn_flood_hosts.insert(host);
    }
    syn_per_host[host] += a.syn;
    if (a.udp_sent >= th.udp_flood_factor * std::max<uint64_t>(1, a.udp_recv) &&
        a.udp_sent >= th.udp_flood_min)
      out.push_back({host, port, "udp_flood"});
  }
  // a flood spread across many ports of one host
  for (const auto& [host, syn] : syn_per_host)
    if (syn >= th.syn_flood_min && !syn_flood_hosts.count(host))
      out.push_back({host, std::nullopt, "syn_flood"});

  return {std::move(out), flows.spoofed_packets > 0};
}

}  // namespace trapline::pcap
