#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "trapline/core/ruleset.hpp"
#include "trapline/pcap/flows.hpp"

namespace trapline::pcap {

struct HttpRequest {
  std::string host;
  std::string uri;
  std::string user_agent;
  std::vector<std::string> exploit_keyword_hits;

  bool operator==(const HttpRequest&) const = default;
};

struct TorFindings {
  std::vector<std::string> onion_domains;
  std::vector<std::string> gateway_connections;

  bool operator==(const TorFindings&) const = default;
};

struct AppFindings {
  std::vector<std::string> dns_queries;
  std::vector<HttpRequest> http_requests;
  TorFindings tor;
  bool bittorrent_detected = false;
};

namespace detail {

// First question name out of a DNS query payload, or empty.
inline std::string dns_qname(const Bytes& payload) {
  std::span<const uint8_t> d(payload.data(), payload.size());
  if (d.size() < 12) return {};
  if (*read_u16(d, 4, true) < 1) return {};  // no questions
  std::string name;
  size_t pos = 12;
  while (pos < d.size()) {
    uint8_t len = d[pos++];
    if (len == 0) break;
    if (len > 63 || pos + len > d.size()) return {};
    if (!name.empty()) name += '.';
    name.append(reinterpret_cast<const char*>(d.data() + pos), len);
    pos += len;
  }
  return name;
}

inline void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (s.empty()) return;
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

inline bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool is_method(const std::string& block) {
  for (const char* m : {"GET ", "POST ", "HEAD ", "PUT ", "DELETE ", "OPTIONS "})
    if (block.rfind(m, 0) == 0) return true;
  return false;
}

// Request lines observed from exploit traffic can carry raw spaces inside the
// URI, so the URI spans from the first space to the one before the protocol
// token when present.
inline HttpRequest parse_http_block(const std::string& block, const Rulesets& rules) {
  HttpRequest req;
  size_t eol = block.find("\r\n");
  std::string line = block.substr(0, eol == std::string::npos ? block.size() : eol);
  size_t first = line.find(' ');
  if (first != std::string::npos) {
    std::string rest = line.substr(first + 1);
    size_t proto = rest.rfind(" HTTP/");
    req.uri = proto == std::string::npos ? rest : rest.substr(0, proto);
  }
  req.exploit_keyword_hits = rules.exploit_uris.all_hits(req.uri);

  size_t pos = eol == std::string::npos ? block.size() : eol + 2;
  while (pos < block.size()) {
    size_t end = block.find("\r\n", pos);
    if (end == std::string::npos) end = block.size();
    std::string hline = block.substr(pos, end - pos);
    pos = end + 2;
    size_t colon = hline.find(':');
    if (colon == std::string::npos) continue;
    std::string key = lower(hline.substr(0, colon));
    size_t vs = hline.find_first_not_of(' ', colon + 1);
    std::string value = vs == std::string::npos ? "" : hline.substr(vs);
    if (key == "host") req.host = value;
    else if (key == "user-agent") req.user_agent = value;
  }
  return req;
}

}  // namespace detail

// Walks the capture once for the application layer: DNS question names from
// UDP/53, HTTP requests reassembled per outbound TCP stream, Tor indicators
// from the names seen, and BitTorrent markers in either transport.
inline AppFindings extract_application(const Bytes& capture_bytes,
                                       const Rulesets& rules = default_rulesets()) {
  Capture cap = read_capture(capture_bytes);
  std::vector<DecodedPacket> decoded;
  for (const auto& p : cap.packets)
    if (auto d = decode_packet(p)) decoded.push_back(std::move(*d));

  AppFindings out;

  // streams keyed like flows, outbound payload only, capture order
  std::map<std::tuple<std::string, uint16_t, std::string, uint16_t>, std::string> streams;
  std::vector<decltype(streams)::key_type> stream_order;

  for (const auto& p : decoded) {
    std::string_view payload(reinterpret_cast<const char*>(p.payload.data()), p.payload.size());
    if (p.protocol == kProtoUdp) {
      if (p.dst_port == 53)
        detail::push_unique(out.dns_queries, detail::dns_qname(p.payload));
      if (!payload.empty() && payload[0] == 'd' && payload.find("1:q") != std::string_view::npos &&
          payload.find(":id20:") != std::string_view::npos)
        out.bittorrent_detected = true;
      continue;
    }
    if (payload.empty()) continue;
    if (payload.find("BitTorrent protocol") != std::string_view::npos)
      out.bittorrent_detected = true;
    auto key = std::tuple{p.src_ip, p.src_port, p.dst_ip, p.dst_port};
    auto [it, fresh] = streams.emplace(key, std::string{});
    if (fresh) stream_order.push_back(key);
    it->second.append(payload);
  }

  for (const auto& key : stream_order) {
    const std::string& stream = streams[key];
    size_t pos = 0;
    while (pos < stream.size()) {
      size_t next = stream.find("\r\n\r\n", pos);
      std::string block = stream.substr(pos, next == std::string::npos ? std::string::npos
                                                                       : next - pos);
      pos = next == std::string::npos ? stream.size() : next + 4;
      if (detail::is_method(block))
        out.http_requests.push_back(detail::parse_http_block(block, rules));
    }
  }

  std::vector<std::string> names = out.dns_queries;
  for (const auto& r : out.http_requests) detail::push_unique(names, r.host);
  for (const auto& n : names) {
    if (detail::ends_with(detail::lower(n), ".onion"))
      detail::push_unique(out.tor.onion_domains, n);
    else if (rules.tor_gateways.matches(detail::lower(n)))
      detail::push_unique(out.tor.gateway_connections, n);
  }
  return out;
}

}  // namespace trapline::pcap
