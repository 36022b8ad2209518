#pragma once

// Shared payload extraction for honeypot sessions. Both honeypots feed
// attacker input through one of these and take the single resulting payload
// when the session closes, so one session never produces two submissions.

#include <algorithm>
#include <string>
#include <vector>

#include "trapline/honeypot/records.hpp"
#include "trapline/parsers/hex_script.hpp"
#include "trapline/parsers/shell_script.hpp"

namespace trapline::honeypot {

class SessionExtractor {
 public:
  // Scans free-form text (a request URI, a body, a shell command line) for
  // download URLs. The first URL seen becomes the session payload.
  void scan_text(const std::string& text) {
    for (auto& u : parsers::extract_url_strings(parsers::parse_shell_script(text)))
      if (std::find(urls_.begin(), urls_.end(), u) == urls_.end()) urls_.push_back(u);
  }

  // Records one echo/printf command if it carries decodable hex chunks headed
  // for a file. A redirect-less echo of escape bytes is a shell probe, not a
  // transfer. Returns true when the line was part of a byte transfer.
  bool scan_hex_command(const std::string& line) {
    auto script = parsers::parse_hex_script(line);
    bool redirected = false;
    for (const auto& c : script.chunks) redirected = redirected || !c.target.empty();
    if (script.chunks.empty() || !redirected) return false;
    hex_lines_.push_back(line);
    return true;
  }

  const std::vector<std::string>& urls() const { return urls_; }
  bool has_hex() const { return !hex_lines_.empty(); }

  // A URL is the canonical pointer to the distribution server, so it wins over
  // an echoed byte transfer when a session somehow produced both.
  CapturedPayload payload() const {
    if (!urls_.empty()) return {CapturedKind::url, urls_.front()};
    if (!hex_lines_.empty()) {
      std::string script;
      for (const auto& l : hex_lines_) {
        script += l;
        script += '\n';
      }
      return {CapturedKind::hex_script, script};
    }
    return {CapturedKind::none, ""};
  }

 private:
  std::vector<std::string> urls_;
  std::vector<std::string> hex_lines_;
};

}  // namespace trapline::honeypot
