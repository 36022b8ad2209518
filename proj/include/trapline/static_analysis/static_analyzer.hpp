#pragma once

#include <algorithm>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapline/core/config.hpp"
#include "trapline/core/ruleset.hpp"
#include "trapline/core/url.hpp"
#include "trapline/elf/elf.hpp"
#include "trapline/static_analysis/entropy.hpp"

namespace trapline::static_analysis {

enum class Packing { none, standard_upx, custom_packer };

inline const char* to_string(Packing p) {
  switch (p) {
    case Packing::none: return "none";
    case Packing::standard_upx: return "standard_upx";
    default: return "custom_packer";
  }
}

inline Packing packing_from_string(std::string_view s) {
  if (s == "standard_upx") return Packing::standard_upx;
  if (s == "custom_packer") return Packing::custom_packer;
  return Packing::none;
}

struct IocSet {
  std::vector<std::string> ips;
  std::vector<std::string> domains;
  std::vector<std::string> urls;
  std::vector<std::string> user_agents;
  std::vector<std::string> exploit_keywords;

  bool empty() const {
    return ips.empty() && domains.empty() && urls.empty() && user_agents.empty() &&
           exploit_keywords.empty();
  }
};

struct SectionEntropy {
  std::string name;
  uint64_t size = 0;
  double entropy = 0.0;
};

struct StaticReport {
  std::vector<std::string> strings;
  IocSet iocs;
  elf::Linking linking = elf::Linking::static_linked;
  bool stripped = true;
  bool string_encoding_suspected = false;
  Packing packing = Packing::none;
  double entropy = 0.0;  // aggregate, bits per byte
  std::vector<SectionEntropy> sections;
};

// Printable ASCII runs of at least min_len characters, over all section
// contents when a section table exists, otherwise over the whole file.
inline std::vector<std::string> extract_strings(const elf::ElfImage& img, size_t min_len = 4) {
  std::vector<std::string> out;
  auto scan = [&](std::span<const uint8_t> data) {
    std::string run;
    for (uint8_t b : data) {
      if (b >= 0x20 && b < 0x7f) {
        run.push_back(char(b));
      } else {
        if (run.size() >= min_len) out.push_back(run);
        run.clear();
      }
    }
    if (run.size() >= min_len) out.push_back(run);
  };
  bool any_section = false;
  for (const auto& s : img.sections) {
    auto body = img.section_contents(s);
    if (body.empty()) continue;
    any_section = true;
    scan(body);
  }
  if (!any_section) scan(img.bytes);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

inline bool valid_ipv4(const std::string& s) {
  int dots = 0;
  long octet = 0;
  int digits = 0;
  for (char c : s) {
    if (c == '.') {
      if (digits == 0 || octet > 255) return false;
      dots++;
      octet = 0;
      digits = 0;
    } else if (c >= '0' && c <= '9') {
      octet = octet * 10 + (c - '0');
      digits++;
      if (digits > 3) return false;
    } else {
      return false;
    }
  }
  return dots == 3 && digits > 0 && octet <= 255;
}

// Modest allowlist of TLDs seen in IoT botnet infrastructure; keeps the
// domain regex from swallowing file names like "Packets.mips".
inline const std::set<std::string>& known_tlds() {
  static const std::set<std::string> tlds = {
      "com", "net",  "org", "info", "biz",  "io",  "ru", "cn",   "su", "us", "uk",
      "de",  "nl",   "fr",  "eu",   "me",   "cc",  "tk", "ml",   "ga", "gq", "cf",
      "pw",  "top",  "xyz", "club", "site", "online", "vip", "icu", "fun",
      "to",  "ws",   "ly",  "pet",  "onion",
  };
  return tlds;
}

}  // namespace detail

inline IocSet extract_iocs(const std::vector<std::string>& strings,
                           const Rulesets& rules = default_rulesets()) {
  IocSet iocs;
  static const std::regex ip_re(R"((\d{1,3}\.){3}\d{1,3})");
  static const std::regex domain_re(R"([A-Za-z0-9]([A-Za-z0-9\-]*[A-Za-z0-9])?(\.[A-Za-z0-9]([A-Za-z0-9\-]*[A-Za-z0-9])?)+)");

  for (const auto& s : strings) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), ip_re); it != std::sregex_iterator();
         ++it) {
      if (detail::valid_ipv4(it->str())) iocs.ips.push_back(it->str());
    }
    for (auto it = std::sregex_iterator(s.begin(), s.end(), domain_re);
         it != std::sregex_iterator(); ++it) {
      std::string d = it->str();
      auto dot = d.rfind('.');
      if (dot == std::string::npos) continue;
      std::string tld = d.substr(dot + 1);
      std::transform(tld.begin(), tld.end(), tld.begin(),
                     [](unsigned char c) { return char(std::tolower(c)); });
      if (detail::known_tlds().count(tld) && !detail::valid_ipv4(d)) iocs.domains.push_back(d);
    }
    for (const auto& u : rules.url_patterns.all_matches(s)) {
      if (is_valid_url(u)) iocs.urls.push_back(u);
    }
    for (const auto& prefix : rules.user_agent_prefixes.patterns) {
      if (s.rfind(prefix, 0) == 0) {
        iocs.user_agents.push_back(s);
        break;
      }
    }
    if (rules.exploit_uris.matches(s)) iocs.exploit_keywords.push_back(s);
  }

  auto dedup = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedup(iocs.ips);
  dedup(iocs.domains);
  dedup(iocs.urls);
  dedup(iocs.user_agents);
  dedup(iocs.exploit_keywords);
  return iocs;
}

// Per-section entropies plus the aggregate over concatenated non-empty section
// contents. Files without a section table fall back to whole-file entropy with
// the ELF header excluded.
inline std::pair<std::vector<SectionEntropy>, double> compute_entropy(const elf::ElfImage& img) {
  std::vector<SectionEntropy> sections;
  Bytes concat;
  for (const auto& s : img.sections) {
    if (s.name.empty() && s.type == 0) continue;  // NULL entry
    auto body = img.section_contents(s);
    sections.push_back({s.name, s.size, shannon_entropy(body)});
    concat.insert(concat.end(), body.begin(), body.end());
  }
  double aggregate;
  if (concat.empty()) {
    std::span<const uint8_t> rest(img.bytes);
    if (rest.size() > img.header_size) rest = rest.subspan(img.header_size);
    else rest = {};
    aggregate = shannon_entropy(rest);
  } else {
    aggregate = shannon_entropy(concat);
  }
  return {std::move(sections), aggregate};
}

// Structural check for stock UPX output: loader-info magic directly after the
// program header table, program-info sizes consistent, magic repeated in the
// trailing pack header. No unpacking is attempted.
inline bool upx_structure_valid(const elf::ElfImage& img) {
  std::span<const uint8_t> b(img.bytes);
  bool be = img.endianness == elf::Endianness::big;
  std::optional<uint64_t> phoff;
  if (img.is_64bit) {
    phoff = read_u64(b, 32, be);
  } else if (auto v = read_u32(b, 28, be)) {
    phoff = *v;
  }
  auto phentsize = read_u16(b, img.is_64bit ? 54 : 42, be);
  auto phnum = read_u16(b, img.is_64bit ? 56 : 44, be);
  if (!phoff || !phentsize || !phnum || *phnum == 0) return false;

  size_t linfo = size_t(*phoff) + size_t(*phnum) * *phentsize;
  if (linfo + 24 > b.size()) return false;
  if (std::memcmp(b.data() + linfo + 4, "UPX!", 4) != 0) return false;

  auto p_filesize = read_u32(b, linfo + 16, be);
  auto p_blocksize = read_u32(b, linfo + 20, be);
  if (!p_filesize || !p_blocksize) return false;
  if (*p_filesize == 0 || *p_filesize != *p_blocksize) return false;

  // Pack header magic within the last 36 bytes.
  size_t tail_start = b.size() > 36 ? b.size() - 36 : 0;
  for (size_t i = tail_start; i + 4 <= b.size(); i++) {
    if (std::memcmp(b.data() + i, "UPX!", 4) == 0) return true;
  }
  return false;
}

inline Packing classify_packing(const elf::ElfImage& img, const std::vector<std::string>& strings,
                                double aggregate_entropy, const Thresholds& thresholds) {
  if (aggregate_entropy <= thresholds.packed_entropy) return Packing::none;
  bool upx_string = std::any_of(strings.begin(), strings.end(), [](const std::string& s) {
    return s.find("UPX") != std::string::npos;
  });
  if (upx_string && upx_structure_valid(img)) return Packing::standard_upx;
  return Packing::custom_packer;
}

// String-encoding suspicion: nothing recognizable in the strings at all.
inline bool detect_string_encoding(const IocSet& iocs, const std::vector<std::string>& strings,
                                   const Ruleset& botnet_keywords) {
  if (!iocs.empty()) return false;
  for (const auto& s : strings)
    if (botnet_keywords.matches(s)) return false;
  return true;
}

inline StaticReport analyze_static(const elf::ElfImage& img,
                                   const Thresholds& thresholds = Thresholds{},
                                   const Rulesets& rules = default_rulesets()) {
  StaticReport report;
  report.strings = extract_strings(img);
  report.iocs = extract_iocs(report.strings, rules);
  report.linking = img.linking;
  report.stripped = img.stripped;
  auto [sections, aggregate] = compute_entropy(img);
  report.sections = std::move(sections);
  report.entropy = aggregate;
  report.packing = classify_packing(img, report.strings, aggregate, thresholds);
  report.string_encoding_suspected =
      detect_string_encoding(report.iocs, report.strings, rules.botnet_keywords);
  return report;
}

inline nlohmann::json to_json(const StaticReport& r) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : r.sections)
    sections.push_back({{"name", s.name}, {"size", s.size}, {"entropy", s.entropy}});
  return {
      {"strings", r.strings},
      {"iocs",
       {{"ips", r.iocs.ips},
        {"domains", r.iocs.domains},
        {"urls", r.iocs.urls},
        {"user_agents", r.iocs.user_agents},
        {"exploit_keywords", r.iocs.exploit_keywords}}},
      {"linking", r.linking == elf::Linking::dynamic_linked ? "dynamic" : "static"},
      {"stripped", r.stripped},
      {"string_encoding_suspected", r.string_encoding_suspected},
      {"packing", to_string(r.packing)},
      {"entropy", r.entropy},
      {"sections", sections},
  };
}

inline StaticReport static_report_from_json(const nlohmann::json& j) {
  StaticReport r;
  r.strings = j.at("strings").get<std::vector<std::string>>();
  const auto& i = j.at("iocs");
  r.iocs.ips = i.at("ips").get<std::vector<std::string>>();
  r.iocs.domains = i.at("domains").get<std::vector<std::string>>();
  r.iocs.urls = i.at("urls").get<std::vector<std::string>>();
  r.iocs.user_agents = i.at("user_agents").get<std::vector<std::string>>();
  r.iocs.exploit_keywords = i.at("exploit_keywords").get<std::vector<std::string>>();
  r.linking = j.at("linking") == "dynamic" ? elf::Linking::dynamic_linked
                                           : elf::Linking::static_linked;
  r.stripped = j.at("stripped").get<bool>();
  r.string_encoding_suspected = j.at("string_encoding_suspected").get<bool>();
  r.packing = packing_from_string(j.at("packing").get<std::string>());
  r.entropy = j.at("entropy").get<double>();
  for (const auto& s : j.at("sections"))
    r.sections.push_back({s.at("name"), s.at("size"), s.at("entropy")});
  return r;
}

}  // namespace trapline::static_analysis
