#pragma once

#include <cctype>
#include <optional>
#include <string>

namespace trapline {

// Just enough URL handling for malware-distribution links: scheme://host[:port][/path].
// Not a general-purpose RFC 3986 parser.
struct Url {
  std::string scheme;
  std::string host;
  int port = 0;  // 0 = scheme default
  std::string path;  // includes query, leading '/'

  int effective_port() const {
    if (port) return port;
    if (scheme == "https") return 443;
    if (scheme == "tftp") return 69;
    if (scheme == "ftp") return 21;
    return 80;
  }

  // host[:port] as written, used as the MD-server identity in clustering.
  std::string server() const {
    return port ? host + ":" + std::to_string(port) : host;
  }

  std::string to_string() const {
    std::string out = scheme + "://" + host;
    if (port) out += ":" + std::to_string(port);
    out += path.empty() ? "/" : path;
    return out;
  }

  // Path with the last segment removed; the MD-server directory that sibling
  // samples are usually served from.
  std::string directory() const {
    auto q = path.find('?');
    std::string p = q == std::string::npos ? path : path.substr(0, q);
    auto slash = p.rfind('/');
    if (slash == std::string::npos) return "/";
    return p.substr(0, slash + 1);
  }

  std::string basename() const {
    auto q = path.find('?');
    std::string p = q == std::string::npos ? path : path.substr(0, q);
    auto slash = p.rfind('/');
    return slash == std::string::npos ? p : p.substr(slash + 1);
  }
};

inline bool valid_host_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
}

inline std::optional<Url> parse_url(std::string_view text) {
  Url u;
  auto sep = text.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  u.scheme = std::string(text.substr(0, sep));
  for (char& c : u.scheme) c = char(std::tolower(static_cast<unsigned char>(c)));
  if (u.scheme != "http" && u.scheme != "https" && u.scheme != "ftp" && u.scheme != "tftp")
    return std::nullopt;

  std::string_view rest = text.substr(sep + 3);
  size_t host_end = 0;
  while (host_end < rest.size() && valid_host_char(rest[host_end])) host_end++;
  if (host_end == 0) return std::nullopt;
  u.host = std::string(rest.substr(0, host_end));
  rest = rest.substr(host_end);

  if (!rest.empty() && rest[0] == ':') {
    size_t i = 1, port = 0;
    while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) {
      port = port * 10 + size_t(rest[i] - '0');
      if (port > 65535) return std::nullopt;
      i++;
    }
    if (i == 1) return std::nullopt;
    u.port = int(port);
    rest = rest.substr(i);
  }

  if (!rest.empty() && rest[0] != '/') return std::nullopt;
  u.path = std::string(rest);
  if (u.path.empty()) u.path = "/";
  return u;
}

inline bool is_valid_url(std::string_view text) {
  return parse_url(text).has_value();
}

}  // namespace trapline
