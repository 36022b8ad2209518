#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trapline/core/bytes.hpp"
#include "trapline/core/error.hpp"

namespace trapline::pcap {

constexpr uint32_t kMagicNative = 0xA1B2C3D4;
constexpr uint32_t kMagicSwapped = 0xD4C3B2A1;
constexpr uint32_t kLinkEthernet = 1;

struct Packet {
  uint32_t ts_sec = 0;
  uint32_t ts_usec = 0;
  uint32_t orig_len = 0;
  Bytes data;  // captured bytes, starting at the ethernet header
};

struct Capture {
  std::vector<Packet> packets;
  size_t truncated = 0;  // records cut short by the end of the file
};

// Classic pcap reader. Both byte orders are accepted; the link type must be
// ethernet. A record whose stated length runs past the end of the buffer is
// dropped and counted, and reading stops there since the stream cannot be
// resynchronised.
inline Capture read_capture(std::span<const uint8_t> file) {
  if (file.size() < 24) fail(ErrorKind::invalid_input, "capture shorter than its global header");
  uint32_t magic = *read_u32(file, 0, false);
  bool swapped;
  if (magic == kMagicNative) swapped = false;
  else if (magic == kMagicSwapped) swapped = true;
  else fail(ErrorKind::invalid_input, "unrecognized capture magic");

  auto u32 = [&](size_t off) -> std::optional<uint32_t> {
    return read_u32(file, off, swapped);
  };
  if (*u32(20) != kLinkEthernet)
    fail(ErrorKind::unsupported, "capture link type is not ethernet");

  Capture out;
  size_t pos = 24;
  while (pos < file.size()) {
    if (pos + 16 > file.size()) {
      out.truncated++;
      break;
    }
    Packet p;
    p.ts_sec = *u32(pos);
    p.ts_usec = *u32(pos + 4);
    uint32_t incl = *u32(pos + 8);
    p.orig_len = *u32(pos + 12);
    pos += 16;
    if (pos + incl > file.size()) {
      out.truncated++;
      break;
    }
    p.data.assign(file.begin() + pos, file.begin() + pos + incl);
    pos += incl;
    out.packets.push_back(std::move(p));
  }
  return out;
}

inline Capture read_capture(const Bytes& file) {
  return read_capture(std::span<const uint8_t>(file.data(), file.size()));
}

// Serializes packets back into a classic pcap file. `swapped` selects the
// byte-swapped magic so both reader paths can be exercised.
inline Bytes write_capture(const std::vector<Packet>& packets, bool swapped = false) {
  Bytes out;
  auto u32 = [&](uint32_t v) { put_u32(out, v, swapped); };
  auto u16 = [&](uint16_t v) { put_u16(out, v, swapped); };
  u32(kMagicNative);
  u16(2);
  u16(4);
  u32(0);  // thiszone
  u32(0);  // sigfigs
  u32(65535);
  u32(kLinkEthernet);
  for (const auto& p : packets) {
    u32(p.ts_sec);
    u32(p.ts_usec);
    u32(static_cast<uint32_t>(p.data.size()));
    u32(p.orig_len ? p.orig_len : static_cast<uint32_t>(p.data.size()));
    out.insert(out.end(), p.data.begin(), p.data.end());
  }
  return out;
}

constexpr uint16_t kEtherIpv4 = 0x0800;
constexpr uint8_t kProtoTcp = 6;
constexpr uint8_t kProtoUdp = 17;

constexpr uint8_t kTcpFin = 0x01;
constexpr uint8_t kTcpSyn = 0x02;
constexpr uint8_t kTcpRst = 0x04;
constexpr uint8_t kTcpPsh = 0x08;
constexpr uint8_t kTcpAck = 0x10;

struct DecodedPacket {
  std::string src_ip;
  std::string dst_ip;
  uint8_t protocol = 0;  // kProtoTcp or kProtoUdp
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  uint8_t tcp_flags = 0;
  Bytes payload;
};

namespace detail {

inline std::string ipv4_to_string(std::span<const uint8_t> b) {
  return std::to_string(b[0]) + "." + std::to_string(b[1]) + "." + std::to_string(b[2]) + "." +
         std::to_string(b[3]);
}

inline std::optional<std::array<uint8_t, 4>> parse_ipv4(const std::string& s) {
  std::array<uint8_t, 4> out{};
  size_t pos = 0;
  for (int i = 0; i < 4; i++) {
    size_t dot = i < 3 ? s.find('.', pos) : s.size();
    if (dot == std::string::npos) return std::nullopt;
    std::string part = s.substr(pos, dot - pos);
    if (part.empty() || part.size() > 3) return std::nullopt;
    int v = 0;
    for (char c : part) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    if (v > 255) return std::nullopt;
    out[i] = static_cast<uint8_t>(v);
    pos = dot + 1;
  }
  return out;
}

}  // namespace detail

// Decodes ethernet + IPv4 + TCP/UDP. Anything else (ARP, IPv6, ICMP, short
// frames) yields nullopt and is counted by the caller as unparsed.
inline std::optional<DecodedPacket> decode_packet(const Packet& p) {
  std::span<const uint8_t> d(p.data.data(), p.data.size());
  if (d.size() < 14) return std::nullopt;
  if (*read_u16(d, 12, true) != kEtherIpv4) return std::nullopt;
  size_t ip = 14;
  if (d.size() < ip + 20) return std::nullopt;
  uint8_t vihl = d[ip];
  if ((vihl >> 4) != 4) return std::nullopt;
  size_t ihl = static_cast<size_t>(vihl & 0x0F) * 4;
  if (ihl < 20 || d.size() < ip + ihl) return std::nullopt;

  DecodedPacket out;
  out.protocol = d[ip + 9];
  out.src_ip = detail::ipv4_to_string(d.subspan(ip + 12, 4));
  out.dst_ip = detail::ipv4_to_string(d.subspan(ip + 16, 4));
  size_t l4 = ip + ihl;

  if (out.protocol == kProtoTcp) {
    if (d.size() < l4 + 20) return std::nullopt;
    out.src_port = *read_u16(d, l4, true);
    out.dst_port = *read_u16(d, l4 + 2, true);
    size_t doff = static_cast<size_t>(d[l4 + 12] >> 4) * 4;
    if (doff < 20 || d.size() < l4 + doff) return std::nullopt;
    out.tcp_flags = d[l4 + 13];
    out.payload.assign(d.begin() + l4 + doff, d.end());
    return out;
  }
  if (out.protocol == kProtoUdp) {
    if (d.size() < l4 + 8) return std::nullopt;
    out.src_port = *read_u16(d, l4, true);
    out.dst_port = *read_u16(d, l4 + 2, true);
    out.payload.assign(d.begin() + l4 + 8, d.end());
    return out;
  }
  return std::nullopt;
}

// Builds a wire-ready ethernet/IPv4/TCP-or-UDP frame. Checksums are zeroed;
// nothing in the pipeline verifies them.
inline Packet encode_packet(const std::string& src_ip, uint16_t src_port,
                            const std::string& dst_ip, uint16_t dst_port, uint8_t protocol,
                            uint8_t tcp_flags, std::span<const uint8_t> payload,
                            uint32_t ts_sec = 0, uint32_t ts_usec = 0) {
  auto src = detail::parse_ipv4(src_ip);
  auto dst = detail::parse_ipv4(dst_ip);
  if (!src || !dst) fail(ErrorKind::invalid_input, "bad IPv4 literal");

  Bytes d;
  for (int i = 0; i < 6; i++) d.push_back(0x02);  // dst mac
  for (int i = 0; i < 6; i++) d.push_back(0x04);  // src mac
  put_u16(d, kEtherIpv4, true);

  size_t l4len = (protocol == kProtoTcp ? 20 : 8) + payload.size();
  d.push_back(0x45);  // v4, ihl 5
  d.push_back(0);
  put_u16(d, static_cast<uint16_t>(20 + l4len), true);
  put_u16(d, 0, true);  // id
  put_u16(d, 0, true);  // frag
  d.push_back(64);  // ttl
  d.push_back(protocol);
  put_u16(d, 0, true);  // checksum
  d.insert(d.end(), src->begin(), src->end());
  d.insert(d.end(), dst->begin(), dst->end());

  if (protocol == kProtoTcp) {
    put_u16(d, src_port, true);
    put_u16(d, dst_port, true);
    put_u32(d, 0, true);  // seq
    put_u32(d, 0, true);  // ack
    d.push_back(5 << 4);
    d.push_back(tcp_flags);
    put_u16(d, 65535, true);  // window
    put_u16(d, 0, true);      // checksum
    put_u16(d, 0, true);      // urgent
  } else {
    put_u16(d, src_port, true);
    put_u16(d, dst_port, true);
    put_u16(d, static_cast<uint16_t>(8 + payload.size()), true);
    put_u16(d, 0, true);
  }
  d.insert(d.end(), payload.begin(), payload.end());

  Packet p;
  p.ts_sec = ts_sec;
  p.ts_usec = ts_usec;
  p.orig_len = static_cast<uint32_t>(d.size());
  p.data = std::move(d);
  return p;
}

}  // namespace trapline::pcap
