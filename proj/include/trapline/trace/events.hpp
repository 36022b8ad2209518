#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "trapline/core/error.hpp"

namespace trapline::trace {

struct SyscallEvent {
  int pid = 0;
  std::string name;
  std::vector<std::string> args;
  std::string retval;
  size_t seq = 0;

  // detectors match keywords over this form
  std::string joined_args() const {
    std::string out;
    for (size_t i = 0; i < args.size(); i++) {
      if (i) out += ", ";
      out += args[i];
    }
    return out;
  }
};

enum class TraceFormat { canonical };

struct ParsedTrace {
  std::vector<SyscallEvent> events;
  size_t malformed_lines = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) a++;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) b--;
  return std::string(s.substr(a, b - a));
}

// Splits an argument list on commas at nesting depth zero, respecting quotes
// and their escapes.
inline std::vector<std::string> split_args(std::string_view body) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  char quote = 0;
  for (size_t i = 0; i < body.size(); i++) {
    char c = body[i];
    if (quote) {
      cur.push_back(c);
      if (c == '\\' && i + 1 < body.size()) {
        cur.push_back(body[++i]);
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    switch (c) {
      case '"':
      case '\'':
        quote = c;
        cur.push_back(c);
        break;
      case '(':
      case '[':
      case '{':
        depth++;
        cur.push_back(c);
        break;
      case ')':
      case ']':
      case '}':
        depth--;
        cur.push_back(c);
        break;
      case ',':
        if (depth == 0) {
          out.push_back(trim(cur));
          cur.clear();
        } else {
          cur.push_back(c);
        }
        break;
      default:
        cur.push_back(c);
    }
  }
  std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

struct LineParts {
  int pid;
  std::string rest;  // after the pid
};

inline std::optional<LineParts> split_pid(const std::string& line) {
  size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) i++;
  size_t start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) i++;
  if (i == start || i >= line.size() || !std::isspace(static_cast<unsigned char>(line[i])))
    return std::nullopt;
  int pid = std::stoi(line.substr(start, i - start));
  if (pid <= 0) return std::nullopt;
  return LineParts{pid, trim(line.substr(i))};
}

// Finds the '=' separating the call from its return value: the last '=' that
// sits outside quotes and parentheses.
inline std::optional<size_t> retval_eq(const std::string& s) {
  int depth = 0;
  char quote = 0;
  std::optional<size_t> found;
  for (size_t i = 0; i < s.size(); i++) {
    char c = s[i];
    if (quote) {
      if (c == '\\') i++;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '(' || c == '[' || c == '{') depth++;
    else if (c == ')' || c == ']' || c == '}') depth -= depth > 0;  // resumed tails close an unseen paren
    else if (c == '=' && depth == 0) found = i;
  }
  return found;
}

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

}  // namespace detail

// Parses "pid name(arg, …) = retval" lines. Interrupted calls in the strace
// style ("<unfinished ...>" / "<... name resumed>") are merged by pid and name
// adjacency; fragments that never find their other half are skipped. Lines
// that fit no form count as malformed. A trace with zero parseable events is
// an error.
inline ParsedTrace parse_trace(const std::string& text,
                               TraceFormat format = TraceFormat::canonical) {
  (void)format;
  ParsedTrace out;
  struct Pending {
    int pid;
    std::string name;
    std::string partial;  // argument text seen so far
  };
  std::vector<Pending> pending;

  auto emit = [&](int pid, const std::string& name, const std::string& argbody,
                  const std::string& retval) {
    SyscallEvent ev;
    ev.pid = pid;
    ev.name = name;
    ev.args = detail::split_args(argbody);
    ev.retval = retval;
    ev.seq = out.events.size();
    out.events.push_back(std::move(ev));
  };

  std::string line;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      line = text.substr(pos);
      pos = text.size() + 1;
    } else {
      line = text.substr(pos, nl - pos);
      pos = nl + 1;
    }
    if (detail::trim(line).empty()) continue;

    auto parts = detail::split_pid(line);
    if (!parts) {
      out.malformed_lines++;
      continue;
    }
    const std::string& rest = parts->rest;

    // resumed fragment: "<... name resumed> tail) = ret"
    if (rest.rfind("<...", 0) == 0) {
      auto res = rest.find("resumed>");
      if (res == std::string::npos) {
        out.malformed_lines++;
        continue;
      }
      std::string name = detail::trim(rest.substr(4, res - 4));
      std::string tail = detail::trim(rest.substr(res + 8));
      auto match = std::find_if(pending.rbegin(), pending.rend(), [&](const Pending& p) {
        return p.pid == parts->pid && p.name == name;
      });
      if (match == pending.rend() || !detail::valid_name(name)) {
        out.malformed_lines++;
        continue;
      }
      auto eq = detail::retval_eq(tail);
      if (!eq) {
        out.malformed_lines++;
        pending.erase(std::next(match).base());
        continue;
      }
      std::string before = detail::trim(tail.substr(0, *eq));
      if (!before.empty() && before.back() == ')') before.pop_back();
      std::string argbody = match->partial;
      if (!before.empty()) {
        if (!argbody.empty()) argbody += " ";
        argbody += before;
      }
      emit(parts->pid, name, argbody, detail::trim(tail.substr(*eq + 1)));
      pending.erase(std::next(match).base());
      continue;
    }

    auto paren = rest.find('(');
    if (paren == std::string::npos) {
      out.malformed_lines++;
      continue;
    }
    std::string name = detail::trim(rest.substr(0, paren));
    if (!detail::valid_name(name)) {
      out.malformed_lines++;
      continue;
    }

    // unfinished fragment: "name(partial <unfinished ...>"
    auto unf = rest.find("<unfinished");
    if (unf != std::string::npos) {
      std::string partial = detail::trim(rest.substr(paren + 1, unf - paren - 1));
      pending.push_back({parts->pid, name, partial});
      continue;
    }

    auto eq = detail::retval_eq(rest);
    if (!eq || *eq < paren) {
      out.malformed_lines++;
      continue;
    }
    std::string before = detail::trim(rest.substr(paren + 1, *eq - paren - 1));
    if (before.empty() || before.back() != ')') {
      out.malformed_lines++;
      continue;
    }
    before.pop_back();
    emit(parts->pid, name, detail::trim(before), detail::trim(rest.substr(*eq + 1)));
  }

  out.malformed_lines += pending.size();  // unfinished with no resume
  if (out.events.empty())
    fail(ErrorKind::invalid_input, "trace contains no parseable events");
  return out;
}

// Numeric return value when the retval text starts with an integer.
inline std::optional<long> retval_int(const SyscallEvent& ev) {
  const std::string& r = ev.retval;
  size_t i = 0;
  if (i < r.size() && (r[i] == '-' || r[i] == '+')) i++;
  size_t digits = i;
  while (digits < r.size() && std::isdigit(static_cast<unsigned char>(r[digits]))) digits++;
  if (digits == i) return std::nullopt;
  return std::stol(r.substr(0, digits));
}

inline std::string strip_arg_quotes(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace trapline::trace
