#pragma once

#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include "trapline/core/error.hpp"

namespace trapline {

// A ruleset is an ordered list of patterns, one per line in its config file.
// Lines starting with '#' and blank lines are ignored. Matching semantics
// (substring vs regex) are decided by the consumer.
struct Ruleset {
  std::vector<std::string> patterns;

  static Ruleset from_lines(std::vector<std::string> lines) { return Ruleset{std::move(lines)}; }

  static Ruleset load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io_error, "cannot open ruleset file: " + path.string());
    Ruleset rs;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      rs.patterns.push_back(line);
    }
    return rs;
  }

  void save_file(const std::filesystem::path& path, const std::string& header = "") const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io_error, "cannot write ruleset file: " + path.string());
    if (!header.empty()) out << "# " << header << "\n";
    for (const auto& p : patterns) out << p << "\n";
  }

  // Case-sensitive substring match; returns the first matching pattern or empty.
  std::string first_match(std::string_view text) const {
    for (const auto& p : patterns)
      if (text.find(p) != std::string_view::npos) return p;
    return {};
  }

  bool matches(std::string_view text) const { return !first_match(text).empty(); }

  // Every pattern that occurs in the text, in ruleset order.
  std::vector<std::string> all_hits(std::string_view text) const {
    std::vector<std::string> out;
    for (const auto& p : patterns)
      if (text.find(p) != std::string_view::npos) out.push_back(p);
    return out;
  }

  // Exact membership, for rulesets used as vocabularies rather than scanners.
  bool contains(std::string_view text) const {
    for (const auto& p : patterns)
      if (p == text) return true;
    return false;
  }

  bool empty() const { return patterns.empty(); }
  size_t size() const { return patterns.size(); }
};

// Ruleset whose patterns are ECMAScript regexes, compiled once.
class RegexRuleset {
 public:
  RegexRuleset() = default;
  explicit RegexRuleset(const Ruleset& rs) : source_(rs) {
    for (const auto& p : rs.patterns) compiled_.emplace_back(p, std::regex::ECMAScript);
  }

  bool matches(const std::string& text) const {
    for (const auto& re : compiled_)
      if (std::regex_search(text, re)) return true;
    return false;
  }

  std::vector<std::string> all_matches(const std::string& text) const {
    std::vector<std::string> out;
    for (const auto& re : compiled_) {
      auto begin = std::sregex_iterator(text.begin(), text.end(), re);
      for (auto it = begin; it != std::sregex_iterator(); ++it) out.push_back(it->str());
    }
    return out;
  }

  const Ruleset& source() const { return source_; }

 private:
  Ruleset source_;
  std::vector<std::regex> compiled_;
};

namespace defaults {

// Keywords typically visible in bot binaries; used both for IoC triage and
// for the string-encoding suspicion flag.
inline Ruleset botnet_keywords() {
  return Ruleset::from_lines({
      "busybox", "/bin/busybox", "telnet", "/bin/sh", "shell", "flood", "attack",
      "scanner", "killer", "botnet", "infect", "payload", "dropper", "mirai",
      "wget", "tftp", "chmod 777", "/proc/cpuinfo",
      "GET /shell", "POST /ctrlt", "/GponForm/", "/picsdesc.xml", "/wanipcn.xml",
  });
}

inline Ruleset persistence_keywords() {
  return Ruleset::from_lines({
      "rc.local", "rc.conf", "init.d", "rcX.d", "systemd", "bashrc", "bash_profile",
      "profile", "autostart", "cron.hourly", "crontab", "cron.daily", "/var/spool/cron",
  });
}

// Process-injection flags watched by the anti-forensics detector.
inline Ruleset injection_keywords() {
  return Ruleset::from_lines({
      "PTRACE_POKETEXT", "PTRACE_POKEDATA", "PTRACE_POKEUSER", "PTRACE_ATTACH",
  });
}

inline Ruleset anti_debug_keywords() {
  return Ruleset::from_lines({
      "PTRACE_TRACEME", "PTRACE_ATTACH", "proc/%s/status",
  });
}

inline Ruleset anti_sandbox_keywords() {
  return Ruleset::from_lines({
      "mountinfo", "/proc/cpuinfo", "/proc/sysinfo", "/proc/vz/", "/proc/bc", "scsi",
      "/sys/class/dmi/id/product_name", "/proc/xen/capabilities",
      "/sys/class/dmi/id/sys_vendor", "/sys/devices/system", "meminfo", "/sys/class/net/",
      "/sys/firmware/efi/systab", "/sys/bus/usb/devices/", "/sys/devices/pci",
      "QEMU", "VMWare", "VirutalBox", "VirtualBox", "KVM",
  });
}

// Keywords seen in exploit request URIs (matched against HTTP request lines
// and extracted strings).
inline Ruleset exploit_uri_keywords() {
  return Ruleset::from_lines({
      "/shell?", "cd /tmp", "cd+/tmp", "wget", "tftp", "chmod 777", "chmod+777",
      "/GponForm/diag_Form", "/ctrlt/DeviceUpgrade_1", "/picsdesc.xml", "/wanipcn.xml",
      "/setup.cgi", "/ws/v1/cluster/apps", "$(", "`", "rm -rf", "rm+-rf",
  });
}

// AV label tokens that never identify a family.
inline Ruleset generic_labels() {
  return Ruleset::from_lines({
      "trojan", "malware", "linux", "elf", "agent", "generic", "virus", "worm",
      "backdoor", "ddos", "downloader", "dropper", "riskware", "unix", "malicious",
      "heur", "suspicious", "variant", "win32", "script", "small", "tiny",
  });
}

inline Ruleset tor_gateways() {
  return Ruleset::from_lines({
      "onion.to", "onion.ws", "onion.ly", "onion.pet", "tor2web.org", "tor2web.io",
  });
}

inline Ruleset user_agent_prefixes() {
  return Ruleset::from_lines({"Mozilla/", "Wget", "curl/", "User-Agent:"});
}

// URL form accepted by the extractors. Trailing shell punctuation is excluded
// so URLs lifted from command lines stay clean.
inline Ruleset url_patterns() {
  return Ruleset::from_lines({
      R"((https?|ftp|tftp)://[A-Za-z0-9._\-]+(:[0-9]+)?(/[^\s"'<>;|&`)]*)?)",
  });
}

}  // namespace defaults

// All configurable pattern lists in one place. load_dir() overrides any list
// that has a file in the given directory; absent files keep the defaults.
struct Rulesets {
  Ruleset botnet_keywords = defaults::botnet_keywords();
  Ruleset persistence = defaults::persistence_keywords();
  Ruleset injection = defaults::injection_keywords();
  Ruleset anti_debug = defaults::anti_debug_keywords();
  Ruleset anti_sandbox = defaults::anti_sandbox_keywords();
  Ruleset exploit_uris = defaults::exploit_uri_keywords();
  Ruleset generic_labels = defaults::generic_labels();
  Ruleset tor_gateways = defaults::tor_gateways();
  Ruleset user_agent_prefixes = defaults::user_agent_prefixes();
  RegexRuleset url_patterns{defaults::url_patterns()};

  static Rulesets load_dir(const std::filesystem::path& dir) {
    Rulesets rs;
    auto maybe = [&](const char* name, Ruleset& target) {
      auto p = dir / name;
      if (std::filesystem::exists(p)) target = Ruleset::load_file(p);
    };
    maybe("botnet_keywords.conf", rs.botnet_keywords);
    maybe("persistence.conf", rs.persistence);
    maybe("injection.conf", rs.injection);
    maybe("anti_debug.conf", rs.anti_debug);
    maybe("anti_sandbox.conf", rs.anti_sandbox);
    maybe("exploit_uris.conf", rs.exploit_uris);
    maybe("generic_labels.conf", rs.generic_labels);
    maybe("tor_gateways.conf", rs.tor_gateways);
    maybe("user_agent_prefixes.conf", rs.user_agent_prefixes);
    auto up = dir / "url_patterns.conf";
    if (std::filesystem::exists(up)) rs.url_patterns = RegexRuleset(Ruleset::load_file(up));
    return rs;
  }

  void save_dir(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    botnet_keywords.save_file(dir / "botnet_keywords.conf", "keywords expected in bot binaries");
    persistence.save_file(dir / "persistence.conf", "persistence locations and schedulers");
    injection.save_file(dir / "injection.conf", "ptrace process-injection flags");
    anti_debug.save_file(dir / "anti_debug.conf", "anti-debug / anti-tracing markers");
    anti_sandbox.save_file(dir / "anti_sandbox.conf", "VM and hypervisor probe targets");
    exploit_uris.save_file(dir / "exploit_uris.conf", "exploit keywords in request URIs");
    generic_labels.save_file(dir / "generic_labels.conf", "non-family AV label tokens");
    tor_gateways.save_file(dir / "tor_gateways.conf", "tor2web-style gateway domains");
    user_agent_prefixes.save_file(dir / "user_agent_prefixes.conf", "user-agent string prefixes");
    url_patterns.source().save_file(dir / "url_patterns.conf", "URL extraction regexes");
  }
};

// Shared compiled defaults; building the regexes per call is wasteful.
inline const Rulesets& default_rulesets() {
  static const Rulesets rs;
  return rs;
}

}  // namespace trapline
