#pragma once

#include <string>
#include <vector>

#include "trapline/core/bytes.hpp"
#include "trapline/pcap/format.hpp"

namespace trapline::fixtures {

// Composes synthetic captures packet by packet. Every scenario helper is
// deterministic so tests can assert exact flow counts.
class CaptureBuilder {
 public:
  explicit CaptureBuilder(std::string sandbox_ip = "10.0.2.15")
      : sandbox_ip_(std::move(sandbox_ip)) {}

  const std::string& sandbox_ip() const { return sandbox_ip_; }

  CaptureBuilder& raw(pcap::Packet p) {
    p.ts_sec = ts_++;
    packets_.push_back(std::move(p));
    return *this;
  }

  CaptureBuilder& tcp(const std::string& src, uint16_t sport, const std::string& dst,
                      uint16_t dport, uint8_t flags, const std::string& payload = "") {
    return raw(pcap::encode_packet(src, sport, dst, dport, pcap::kProtoTcp, flags,
                                   as_span(payload)));
  }

  CaptureBuilder& udp(const std::string& src, uint16_t sport, const std::string& dst,
                      uint16_t dport, const Bytes& payload) {
    return raw(pcap::encode_packet(src, sport, dst, dport, pcap::kProtoUdp, 0,
                                   std::span<const uint8_t>(payload.data(), payload.size())));
  }

  // full three-way handshake from the sandbox to host:port
  CaptureBuilder& handshake(const std::string& host, uint16_t port, uint16_t local_port) {
    tcp(sandbox_ip_, local_port, host, port, pcap::kTcpSyn);
    tcp(host, port, sandbox_ip_, local_port, pcap::kTcpSyn | pcap::kTcpAck);
    tcp(sandbox_ip_, local_port, host, port, pcap::kTcpAck);
    return *this;
  }

  // SYN probes to hosts 10.1.0.1..10.1.0.N on one port; the first `completed`
  // hosts answer and finish the handshake
  CaptureBuilder& syn_sweep(uint16_t port, size_t hosts, size_t completed,
                            uint16_t local_port_base = 40000) {
    for (size_t i = 0; i < hosts; i++) {
      std::string host = "10.1.0." + std::to_string(i + 1);
      auto lp = static_cast<uint16_t>(local_port_base + i);
      if (i < completed) handshake(host, port, lp);
      else tcp(sandbox_ip_, lp, host, port, pcap::kTcpSyn);
    }
    return *this;
  }

  // bare FIN probes, no handshake, hosts 10.2.0.1..N
  CaptureBuilder& fin_scan(uint16_t port, size_t hosts, uint16_t local_port_base = 41000) {
    for (size_t i = 0; i < hosts; i++)
      tcp(sandbox_ip_, static_cast<uint16_t>(local_port_base + i),
          "10.2.0." + std::to_string(i + 1), port, pcap::kTcpFin);
    return *this;
  }

  // established session exchanging `data_packets` payload-bearing segments
  CaptureBuilder& c2_session(const std::string& host, uint16_t port, size_t data_packets = 4,
                             uint16_t local_port = 42000) {
    handshake(host, port, local_port);
    for (size_t i = 0; i < data_packets; i++) {
      tcp(sandbox_ip_, local_port, host, port, pcap::kTcpAck | pcap::kTcpPsh, "ping");
      tcp(host, port, sandbox_ip_, local_port, pcap::kTcpAck | pcap::kTcpPsh, "pong");
    }
    return *this;
  }

  CaptureBuilder& ack_flood(const std::string& victim, uint16_t port, size_t acks,
                            uint16_t local_port = 43000) {
    tcp(sandbox_ip_, local_port, victim, port, pcap::kTcpSyn);
    for (size_t i = 0; i < acks; i++)
      tcp(sandbox_ip_, local_port, victim, port, pcap::kTcpAck);
    return *this;
  }

  CaptureBuilder& syn_flood(const std::string& victim, uint16_t port, size_t syns,
                            uint16_t local_port = 44000) {
    for (size_t i = 0; i < syns; i++)
      tcp(sandbox_ip_, local_port, victim, port, pcap::kTcpSyn);
    return *this;
  }

  // SYN flood with per-packet random source addresses
  CaptureBuilder& spoofed_syn_flood(const std::string& victim, uint16_t port, size_t syns,
                                    uint64_t seed = 99) {
    DeterministicRng rng(seed);
    for (size_t i = 0; i < syns; i++) {
      std::string src = std::to_string(1 + rng.next_below(223)) + "." +
                        std::to_string(rng.next_below(256)) + "." +
                        std::to_string(rng.next_below(256)) + "." +
                        std::to_string(1 + rng.next_below(254));
      tcp(src, static_cast<uint16_t>(1024 + rng.next_below(60000)), victim, port,
          pcap::kTcpSyn);
    }
    return *this;
  }

  CaptureBuilder& udp_flood(const std::string& victim, uint16_t port, size_t datagrams,
                            uint16_t local_port = 45000) {
    Bytes junk(64, 0x41);
    for (size_t i = 0; i < datagrams; i++) udp(sandbox_ip_, local_port, victim, port, junk);
    return *this;
  }

  CaptureBuilder& dns_query(const std::string& name, const std::string& server = "8.8.8.8",
                            uint16_t local_port = 46000) {
    Bytes q;
    put_u16(q, 0x1234, true);  // id
    put_u16(q, 0x0100, true);  // rd
    put_u16(q, 1, true);       // qdcount
    put_u16(q, 0, true);
    put_u16(q, 0, true);
    put_u16(q, 0, true);
    size_t start = 0;
    while (start <= name.size()) {
      size_t dot = name.find('.', start);
      if (dot == std::string::npos) dot = name.size();
      q.push_back(static_cast<uint8_t>(dot - start));
      for (size_t i = start; i < dot; i++) q.push_back(static_cast<uint8_t>(name[i]));
      start = dot + 1;
    }
    q.push_back(0);
    put_u16(q, 1, true);  // qtype A
    put_u16(q, 1, true);  // qclass IN
    return udp(sandbox_ip_, local_port, server, 53, q);
  }

  // handshake plus a request; the request text goes out as one segment
  CaptureBuilder& http_request(const std::string& host_ip, uint16_t port,
                               const std::string& request_text, uint16_t local_port = 47000) {
    handshake(host_ip, port, local_port);
    tcp(sandbox_ip_, local_port, host_ip, port, pcap::kTcpAck | pcap::kTcpPsh, request_text);
    return *this;
  }

  CaptureBuilder& bittorrent_handshake(const std::string& host, uint16_t port = 6881,
                                       uint16_t local_port = 48000) {
    handshake(host, port, local_port);
    std::string hs("\x13", 1);
    hs += "BitTorrent protocol";
    hs.append(48, '\0');
    tcp(sandbox_ip_, local_port, host, port, pcap::kTcpAck | pcap::kTcpPsh, hs);
    return *this;
  }

  CaptureBuilder& dht_ping(const std::string& host, uint16_t port = 6881,
                           uint16_t local_port = 48500) {
    std::string q = "d1:ad2:id20:abcdefghij0123456789e1:q4:ping1:t2:aa1:y1:qe";
    Bytes b(q.begin(), q.end());
    return udp(sandbox_ip_, local_port, host, port, b);
  }

  std::vector<pcap::Packet> packets() const { return packets_; }

  Bytes build(bool swapped = false) const { return pcap::write_capture(packets_, swapped); }

 private:
  static std::span<const uint8_t> as_span(const std::string& s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
  }

  std::string sandbox_ip_;
  std::vector<pcap::Packet> packets_;
  uint32_t ts_ = 1;
};

}  // namespace trapline::fixtures
