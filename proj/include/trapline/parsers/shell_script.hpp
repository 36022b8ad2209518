#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "trapline/core/config.hpp"
#include "trapline/core/ruleset.hpp"
#include "trapline/core/url.hpp"

namespace trapline::parsers {

struct ExtractedUrl {
  std::string url;
  bool loop_derived = false;
};

struct ShellScript {
  std::string source_text;
  std::vector<ExtractedUrl> urls;
  bool truncated = false;  // an emulation cap was hit
};

namespace detail {

inline void substitute_var(std::string& s, const std::string& var, const std::string& value) {
  const std::string braced = "${" + var + "}";
  for (size_t p; (p = s.find(braced)) != std::string::npos;) s.replace(p, braced.size(), value);
  const std::string plain = "$" + var;
  size_t p = 0;
  while ((p = s.find(plain, p)) != std::string::npos) {
    size_t end = p + plain.size();
    // don't clobber a longer variable name sharing the prefix
    if (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_')) {
      p = end;
      continue;
    }
    s.replace(p, plain.size(), value);
    p += value.size();
  }
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

// tftp has no URL on its command line, so the transfer is reconstructed from
// the busybox argument forms:
//   tftp [-g] -r FILE HOST        tftp HOST -c get FILE
inline std::vector<std::string> tftp_urls(const std::string& text) {
  std::vector<std::string> out;
  static const std::regex cmd(R"((?:^|[;&|`(]|\n|\bthen\s|\bdo\s)\s*(?:/[\w./-]*busybox\s+)?tftp\b([^;\n&|)]*))");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), cmd);
       it != std::sregex_iterator(); ++it) {
    auto args = split_ws(it->str(1));
    std::string host, file;
    for (size_t i = 0; i < args.size(); i++) {
      const std::string& a = args[i];
      if (a == "-r" || a == "-c") {
        if (a == "-r" && i + 1 < args.size()) file = strip_quotes(args[++i]);
        if (a == "-c" && i + 2 < args.size() && args[i + 1] == "get")
          file = strip_quotes(args[i + 2]), i += 2;
      } else if (a == "-g" || a == "-p" || a == "-l") {
        if (a == "-l") i++;  // local name, irrelevant
      } else if (a.rfind("-", 0) == 0) {
        continue;
      } else if (host.empty()) {
        host = strip_quotes(a);
      }
    }
    if (host.empty() || file.empty()) continue;
    std::string url = "tftp://" + host + "/" + file;
    if (is_valid_url(url)) out.push_back(url);
  }
  return out;
}

inline const RegexRuleset& url_regexes() {
  static const RegexRuleset re{defaults::url_patterns()};
  return re;
}

inline std::vector<std::string> literal_urls(const std::string& text) {
  std::vector<std::string> out;
  for (auto& m : url_regexes().all_matches(text))
    // a URL still holding an unexpanded $VAR is a template, not a literal
    if (m.find('$') == std::string::npos && is_valid_url(m)) out.push_back(m);
  for (auto& u : tftp_urls(text)) out.push_back(u);
  return out;
}

struct Accumulator {
  std::vector<ExtractedUrl> urls;
  std::map<std::string, size_t> index;
  size_t cap = 0;
  bool truncated = false;

  void add(const std::string& url, bool loop_derived) {
    auto it = index.find(url);
    if (it != index.end()) {
      if (!loop_derived) urls[it->second].loop_derived = false;
      return;
    }
    if (urls.size() >= cap) {
      truncated = true;
      return;
    }
    index[url] = urls.size();
    urls.push_back({url, loop_derived});
  }
};

}  // namespace detail

// Line-oriented URL extraction. Hardcoded URLs come from the regex ruleset;
// wget/curl bodies are regex-visible, tftp transfers are rebuilt from their
// argument form. `for VAR in <literal list>` and `while` loops with a literal
// counter bound are emulated (with caps) to recover computed URLs.
inline ShellScript parse_shell_script(const std::string& text,
                                      const Thresholds& th = Thresholds{}) {
  ShellScript out;
  out.source_text = text;
  detail::Accumulator acc;
  acc.cap = th.loop_url_cap;
  size_t iterations = 0;

  // hardcoded URLs first so the cap can only ever trim derived ones
  for (auto& u : detail::literal_urls(text)) acc.add(u, false);

  // for VAR in a b c; do BODY; done
  static const std::regex for_loop(
      R"(for\s+(\w+)\s+in\s+([^;\n]+)[;\n]\s*do\b(.*?)\bdone\b)",
      std::regex::icase);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), for_loop);
       it != std::sregex_iterator(); ++it) {
    std::string var = it->str(1);
    auto items = detail::split_ws(it->str(2));
    std::string body = it->str(3);
    for (auto& item : items) {
      if (++iterations > th.loop_iteration_cap) {
        out.truncated = true;
        break;
      }
      std::string expanded = body;
      detail::substitute_var(expanded, var, detail::strip_quotes(item));
      for (auto& u : detail::literal_urls(expanded)) acc.add(u, true);
    }
  }

  // VAR=N ... while [ $VAR -lt/-le BOUND ]; do BODY; done   with VAR stepped in BODY
  static const std::regex while_loop(
      R"(while\s+\[\s+\$\{?(\w+)\}?\s+(-lt|-le)\s+(\d+)\s+\][;\n]\s*do\b(.*?)\bdone\b)",
      std::regex::icase);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), while_loop);
       it != std::sregex_iterator(); ++it) {
    std::string var = it->str(1);
    bool inclusive = it->str(2) == "-le";
    long bound = std::stol(it->str(3));
    std::string body = it->str(4);

    long start = 0;
    std::smatch init;
    std::string prefix = text.substr(0, it->position());
    static thread_local std::regex init_re;
    init_re = std::regex(var + R"(=(\d+))");
    for (auto jt = std::sregex_iterator(prefix.begin(), prefix.end(), init_re);
         jt != std::sregex_iterator(); ++jt)
      start = std::stol(jt->str(1));

    for (long v = start; inclusive ? v <= bound : v < bound; v++) {
      if (++iterations > th.loop_iteration_cap) {
        out.truncated = true;
        break;
      }
      std::string expanded = body;
      detail::substitute_var(expanded, var, std::to_string(v));
      for (auto& u : detail::literal_urls(expanded)) acc.add(u, true);
    }
  }

  out.urls = std::move(acc.urls);
  out.truncated = out.truncated || acc.truncated;
  std::stable_sort(out.urls.begin(), out.urls.end(),
                   [](const ExtractedUrl& a, const ExtractedUrl& b) { return a.url < b.url; });
  return out;
}

inline std::vector<std::string> extract_url_strings(const ShellScript& s) {
  std::vector<std::string> out;
  out.reserve(s.urls.size());
  for (auto& u : s.urls) out.push_back(u.url);
  return out;
}

// Quick check used by fetch classification and honeypots.
inline bool looks_like_shell_script(std::span<const uint8_t> body) {
  if (body.empty()) return false;
  size_t printable = 0, n = std::min<size_t>(body.size(), 4096);
  for (size_t i = 0; i < n; i++) {
    uint8_t c = body[i];
    if (c == '\t' || c == '\n' || c == '\r' || (c >= 0x20 && c < 0x7f)) printable++;
  }
  if (printable * 100 < n * 95) return false;
  std::string head(reinterpret_cast<const char*>(body.data()), n);
  static const char* markers[] = {"#!/",   "cd ", "wget", "curl", "tftp",
                                  "chmod", "rm ", "sh ",  "busybox"};
  for (auto* m : markers)
    if (head.find(m) != std::string::npos) return true;
  return false;
}

}  // namespace trapline::parsers
