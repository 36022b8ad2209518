#pragma once

// One HTTP responder covers every web-exploitable service preset. Exploit
// requests routinely break the HTTP grammar (unencoded spaces and shell
// metacharacters in the URI), so the request line is split on the first and
// last space instead of being rejected.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "trapline/core/clock.hpp"
#include "trapline/honeypot/extractor.hpp"
#include "trapline/honeypot/records.hpp"
#include "trapline/honeypot/servers.hpp"

namespace trapline::honeypot {

using RecordSink = std::function<void(const AttackRecord&)>;

inline constexpr size_t kMaxRequestBytes = 1 << 20;

namespace detail {

inline int hex_nibble_at(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// plus_to_space handles form-encoded bodies; the decoded text is only ever a
// scan copy, records keep the raw bytes
inline std::string percent_decode(const std::string& s, bool plus_to_space = false) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); i++) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hex_nibble_at(s[i + 1]), lo = hex_nibble_at(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi << 4 | lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i] == '+' && plus_to_space ? ' ' : s[i]);
  }
  return out;
}

inline std::string header_value(const std::string& headers, const std::string& name) {
  std::string lower;
  lower.reserve(headers.size());
  for (char c : headers) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::string key = name + ":";
  for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  size_t pos = 0;
  while ((pos = lower.find(key, pos)) != std::string::npos) {
    // only at line starts
    if (pos != 0 && lower[pos - 1] != '\n') {
      pos += key.size();
      continue;
    }
    size_t start = pos + key.size();
    size_t end = headers.find('\n', start);
    std::string v = headers.substr(start, end == std::string::npos ? end : end - start);
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.erase(v.begin());
    while (!v.empty() && (v.back() == '\r' || v.back() == ' ')) v.pop_back();
    return v;
  }
  return "";
}

}  // namespace detail

struct HttpExchange {
  AttackRecord record;
  std::string response;
};

// Turns one raw request into the attack record and the bytes to answer with.
inline HttpExchange handle_http_attack(const HoneypotConfig& cfg, const std::string& raw,
                                       const std::string& attacker_ip, uint16_t attacker_port,
                                       const std::string& timestamp) {
  HttpExchange out;
  out.record.honeypot_kind = to_string(cfg.kind);
  out.record.attacker_ip = attacker_ip;
  out.record.attacker_port = attacker_port;
  out.record.timestamp = timestamp;

  size_t line_end = raw.find('\n');
  std::string request_line = raw.substr(0, line_end == std::string::npos ? raw.size() : line_end);
  if (!request_line.empty() && request_line.back() == '\r') request_line.pop_back();

  std::string headers, body;
  if (line_end != std::string::npos) {
    // the separator may begin with the request line's own \r
    size_t blank = raw.find("\r\n\r\n");
    size_t body_at = blank + 4;
    if (blank == std::string::npos) {
      blank = raw.find("\n\n");
      body_at = blank + 2;
    }
    if (blank == std::string::npos) {
      headers = raw.substr(line_end + 1);
    } else {
      if (blank > line_end) headers = raw.substr(line_end + 1, blank - line_end - 1);
      if (body_at < raw.size()) body = raw.substr(body_at);
    }
  }

  HttpRequestInfo info;
  size_t sp = request_line.find(' ');
  if (sp == std::string::npos) {
    info.method = request_line;
  } else {
    info.method = request_line.substr(0, sp);
    std::string rest = request_line.substr(sp + 1);
    size_t last = rest.rfind(' ');
    // the URI runs from the first space to the last, unencoded spaces included
    if (last != std::string::npos && rest.compare(last + 1, 5, "HTTP/") == 0)
      info.uri = rest.substr(0, last);
    else
      info.uri = rest;
  }
  info.user_agent = detail::header_value(headers, "User-Agent");
  out.record.http_request = info;

  SessionExtractor extractor;
  extractor.scan_text(detail::percent_decode(info.uri, true));
  if (!body.empty()) {
    extractor.scan_text(body);
    extractor.scan_text(detail::percent_decode(body, true));
    std::string line;
    for (size_t i = 0; i <= body.size(); i++) {
      if (i == body.size() || body[i] == '\n' || body[i] == ';') {
        if (!line.empty()) extractor.scan_hex_command(line);
        line.clear();
      } else if (body[i] != '\r') {
        line.push_back(body[i]);
      }
    }
  }
  out.record.payload = extractor.payload();

  std::string page = "<html><head><title>" + cfg.hostname + "</title></head><body>" +
                     cfg.banner + "</body></html>\n";
  out.response = "HTTP/1.1 200 OK\r\nServer: " + cfg.banner +
                 "\r\nContent-Type: text/html\r\nContent-Length: " +
                 std::to_string(page.size()) + "\r\nConnection: close\r\n\r\n" + page;
  return out;
}

class HttpExploitHoneypot {
 public:
  HttpExploitHoneypot(HoneypotConfig cfg, RecordSink sink)
      : cfg_(std::move(cfg)), sink_(std::move(sink)) {}

  ~HttpExploitHoneypot() { stop(); }

  // Binds and starts accepting. Returns the bound port (useful with port 0).
  uint16_t start(const std::string& host = "0.0.0.0",
                 std::optional<uint16_t> port = std::nullopt) {
    listener_.open(port.value_or(cfg_.listen_port), host);
    accept_thread_ = std::thread([this] { accept_loop(); });
    return listener_.port();
  }

  uint16_t port() const { return listener_.port(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    listener_.close();
    {
      std::lock_guard<std::mutex> lk(mu_);
      for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> sessions;
    {
      std::lock_guard<std::mutex> lk(mu_);
      sessions.swap(sessions_);
    }
    for (auto& t : sessions)
      if (t.joinable()) t.join();
  }

 private:
  void accept_loop() {
    for (;;) {
      std::string ip;
      uint16_t peer_port = 0;
      int fd = listener_.accept_fd(&ip, &peer_port);
      if (fd < 0) return;
      std::lock_guard<std::mutex> lk(mu_);
      session_fds_.push_back(fd);
      sessions_.emplace_back([this, fd, ip, peer_port] { session(fd, ip, peer_port); });
    }
  }

  void session(int fd, const std::string& ip, uint16_t peer_port) {
    std::string raw;
    bool oversized = false;
    std::optional<size_t> content_length;
    size_t headers_end = std::string::npos;
    int timeout_ms = cfg_.session_timeout_sec * 1000;

    char buf[4096];
    for (;;) {
      ssize_t n = read_some(fd, buf, sizeof buf, timeout_ms);
      if (n <= 0) break;
      raw.append(buf, static_cast<size_t>(n));
      if (raw.size() > kMaxRequestBytes) {
        oversized = true;
        break;
      }
      if (headers_end == std::string::npos) {
        size_t blank = raw.find("\r\n\r\n");
        size_t skip = 4;
        if (blank == std::string::npos) {
          blank = raw.find("\n\n");
          skip = 2;
        }
        if (blank != std::string::npos) {
          headers_end = blank + skip;
          std::string cl = detail::header_value(raw.substr(0, headers_end), "Content-Length");
          if (!cl.empty()) content_length = std::strtoul(cl.c_str(), nullptr, 10);
        }
      }
      if (headers_end != std::string::npos) {
        size_t body_len = raw.size() - headers_end;
        if (!content_length || body_len >= *content_length) break;
      }
    }

    if (oversized) {
      AttackRecord rec;
      rec.honeypot_kind = to_string(cfg_.kind);
      rec.attacker_ip = ip;
      rec.attacker_port = peer_port;
      rec.timestamp = now_iso();
      dispatch(rec);
    } else if (!raw.empty()) {
      auto exchange = handle_http_attack(cfg_, raw, ip, peer_port, now_iso());
      write_all(fd, exchange.response);
      dispatch(exchange.record);
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      session_fds_.erase(std::remove(session_fds_.begin(), session_fds_.end(), fd),
                         session_fds_.end());
    }
    ::close(fd);
  }

  void dispatch(const AttackRecord& rec) {
    if (sink_) sink_(rec);
  }

  HoneypotConfig cfg_;
  RecordSink sink_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<std::thread> sessions_;
  std::vector<int> session_fds_;
};

}  // namespace trapline::honeypot
