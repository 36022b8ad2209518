#pragma once

#include <string>

#include "httplib.h"
#include "trapline/core/bytes.hpp"
#include "trapline/core/config.hpp"
#include "trapline/core/error.hpp"
#include "trapline/core/url.hpp"
#include "trapline/parsers/shell_script.hpp"

namespace trapline::parsers {

enum class ContentKind { elf, shell_script, other };

inline const char* to_string(ContentKind k) {
  switch (k) {
    case ContentKind::elf: return "elf";
    case ContentKind::shell_script: return "shell_script";
    case ContentKind::other: return "other";
  }
  return "other";
}

struct FetchResult {
  Bytes body;
  ContentKind kind = ContentKind::other;
  std::string final_url;  // after redirects
};

inline ContentKind classify_body(std::span<const uint8_t> body) {
  if (starts_with(body, std::string_view("\x7f""ELF", 4))) return ContentKind::elf;
  if (looks_like_shell_script(body)) return ContentKind::shell_script;
  return ContentKind::other;
}

// HTTP GET with caps on time, body size, and redirect depth. Only http is
// dialed out; other schemes surface in extraction but are not fetched.
inline FetchResult fetch_url(const std::string& url_text, const Thresholds& th = Thresholds{}) {
  std::string current = url_text;
  for (size_t hop = 0; hop <= th.fetch_max_redirects; hop++) {
    auto u = parse_url(current);
    if (!u) fail(ErrorKind::invalid_input, "malformed URL: " + current);
    if (u->scheme != "http")
      fail(ErrorKind::unsupported, "scheme not fetchable: " + u->scheme);

    httplib::Client cli(u->host, static_cast<int>(u->effective_port()));
    cli.set_connection_timeout(static_cast<time_t>(th.fetch_timeout_sec), 0);
    cli.set_read_timeout(static_cast<time_t>(th.fetch_timeout_sec), 0);
    cli.set_write_timeout(static_cast<time_t>(th.fetch_timeout_sec), 0);

    Bytes body;
    bool too_large = false;
    auto res = cli.Get(u->path.empty() ? "/" : u->path,
                       [&](const char* data, size_t len) {
                         if (body.size() + len > th.fetch_max_bytes) {
                           too_large = true;
                           return false;
                         }
                         body.insert(body.end(), data, data + len);
                         return true;
                       });
    if (too_large)
      fail(ErrorKind::network_error, "body exceeds " + std::to_string(th.fetch_max_bytes) + " bytes");
    if (!res)
      fail(ErrorKind::network_error, "fetch failed: " + std::string(httplib::to_string(res.error())));

    if (res->status >= 300 && res->status < 400) {
      std::string loc = res->get_header_value("Location");
      if (loc.empty()) fail(ErrorKind::network_error, "redirect without location");
      if (loc.rfind("http://", 0) == 0 || loc.rfind("https://", 0) == 0) {
        current = loc;
      } else if (!loc.empty() && loc[0] == '/') {
        Url next = *u;
        next.path = loc;
        current = next.to_string();
      } else {
        Url next = *u;
        next.path = u->directory() + loc;
        current = next.to_string();
      }
      continue;
    }
    if (res->status != 200)
      fail(ErrorKind::network_error, "http status " + std::to_string(res->status));
    if (body.empty()) fail(ErrorKind::network_error, "empty body");

    FetchResult out;
    out.kind = classify_body(body);
    out.body = std::move(body);
    out.final_url = current;
    return out;
  }
  fail(ErrorKind::network_error, "too many redirects");
}

}  // namespace trapline::parsers
