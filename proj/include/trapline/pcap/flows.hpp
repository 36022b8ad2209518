#pragma once

#include <map>
#include <string>
#include <vector>

#include "trapline/pcap/format.hpp"

namespace trapline::pcap {

struct FlowKey {
  std::string local_endpoint;  // "ip:port" on the sandbox side
  std::string remote_host;
  uint16_t remote_port = 0;
  uint8_t protocol = 0;

  auto operator<=>(const FlowKey&) const = default;
};

struct FlowStats {
  uint64_t syn_sent = 0;
  uint64_t synack_recv = 0;
  uint64_t fin_sent = 0;
  uint64_t ack_sent = 0;  // pure ACKs: flag set, SYN and FIN clear
  uint64_t udp_sent = 0;
  uint64_t udp_recv = 0;
  bool established = false;
  uint64_t bytes = 0;
  uint64_t packets = 0;
};

struct FlowTable {
  std::map<FlowKey, FlowStats> flows;
  std::string sandbox_ip;
  size_t packets_total = 0;
  size_t packets_skipped = 0;  // truncated records plus frames that aren't IPv4 TCP/UDP
  size_t spoofed_packets = 0;  // sent with a source address other than the sandbox's
};

namespace detail {

// The sandbox's own address is the most frequent source of TCP SYNs, falling
// back to UDP sources for captures with no TCP at all. First seen wins ties.
inline std::string infer_sandbox_ip(const std::vector<DecodedPacket>& pkts) {
  std::map<std::string, size_t> syn_sources, udp_sources;
  std::vector<std::string> order;
  for (const auto& p : pkts) {
    auto& bucket = p.protocol == kProtoTcp ? syn_sources : udp_sources;
    if (p.protocol == kProtoTcp && !((p.tcp_flags & kTcpSyn) && !(p.tcp_flags & kTcpAck)))
      continue;
    if (bucket.emplace(p.src_ip, 0).second) order.push_back(p.src_ip);
    bucket[p.src_ip]++;
  }
  const auto& bucket = syn_sources.empty() ? udp_sources : syn_sources;
  std::string best;
  size_t best_count = 0;
  for (const auto& ip : order) {
    auto it = bucket.find(ip);
    if (it != bucket.end() && it->second > best_count) {
      best = ip;
      best_count = it->second;
    }
  }
  return best;
}

}  // namespace detail

// Single pass over the capture: infer the sandbox address, then bucket every
// TCP/UDP packet into a directional flow. Packets sent with a source that is
// neither the sandbox nor a reply to it are spoofed output; they still join
// the flow toward their victim so flood totals add up.
inline FlowTable assemble_flows(const Bytes& capture_bytes) {
  Capture cap = read_capture(capture_bytes);

  std::vector<DecodedPacket> decoded;
  FlowTable table;
  table.packets_total = cap.packets.size() + cap.truncated;
  table.packets_skipped = cap.truncated;
  for (const auto& p : cap.packets) {
    if (auto d = decode_packet(p)) decoded.push_back(std::move(*d));
    else table.packets_skipped++;
  }
  table.sandbox_ip = detail::infer_sandbox_ip(decoded);

  for (const auto& p : decoded) {
    bool inbound = p.dst_ip == table.sandbox_ip;
    if (!inbound && p.src_ip != table.sandbox_ip) table.spoofed_packets++;

    FlowKey key;
    if (inbound) {
      key.local_endpoint = p.dst_ip + ":" + std::to_string(p.dst_port);
      key.remote_host = p.src_ip;
      key.remote_port = p.src_port;
    } else {
      key.local_endpoint = p.src_ip + ":" + std::to_string(p.src_port);
      key.remote_host = p.dst_ip;
      key.remote_port = p.dst_port;
    }
    key.protocol = p.protocol;

    FlowStats& st = table.flows[key];
    st.packets++;
    st.bytes += p.payload.size();
    if (p.protocol == kProtoUdp) {
      (inbound ? st.udp_recv : st.udp_sent)++;
      continue;
    }
    bool syn = p.tcp_flags & kTcpSyn;
    bool ack = p.tcp_flags & kTcpAck;
    bool fin = p.tcp_flags & kTcpFin;
    if (inbound) {
      if (syn && ack) st.synack_recv++;
    } else {
      if (syn && !ack) st.syn_sent++;
      if (fin) st.fin_sent++;
      if (ack && !syn && !fin) st.ack_sent++;
    }
    st.established = st.syn_sent >= 1 && st.synack_recv >= 1;
  }
  return table;
}

}  // namespace trapline::pcap
