#pragma once

#include <ctime>
#include <string>

namespace trapline {

// UTC timestamps in the fixed form 2021-06-01T10:00:00Z, used by reports,
// attack logs, and blacklist entries alike.
inline std::string now_iso(std::time_t t = std::time(nullptr)) {
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace trapline
