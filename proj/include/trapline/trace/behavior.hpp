#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"
#include "trapline/core/ruleset.hpp"
#include "trapline/trace/events.hpp"
#include "trapline/trace/process_tree.hpp"

namespace trapline::trace {

struct Finding {
  std::string technique;
  std::string evidence;  // matched keyword, path, or name
  size_t seq = 0;        // cites the triggering event
};

inline bool operator==(const Finding& a, const Finding& b) {
  return a.technique == b.technique && a.evidence == b.evidence && a.seq == b.seq;
}

struct BehaviorReport {
  ProcessTree process_tree;
  std::vector<std::string> files_created;
  std::vector<std::string> files_removed;
  std::vector<std::string> elf_files_written;  // paths whose recorded writes began with ELF magic
  std::vector<Finding> persistence;
  std::vector<Finding> anti_forensics;
  std::vector<Finding> anti_debug;
  std::vector<Finding> anti_sandbox;
  bool kernel_module_loaded = false;
  size_t event_count = 0;
};

namespace detail {

inline std::string basename_of(const std::string& path) {
  auto slash = path.rfind('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

// argv list out of an execve event: ["rm", "-rf", "x"] style second argument,
// falling back to the path argument alone.
inline std::vector<std::string> exec_argv(const SyscallEvent& ev) {
  std::vector<std::string> out;
  if (ev.args.size() >= 2 && !ev.args[1].empty() && ev.args[1].front() == '[') {
    std::string inner = ev.args[1].substr(1, ev.args[1].size() - 2);
    std::string cur;
    char quote = 0;
    for (size_t i = 0; i < inner.size(); i++) {
      char c = inner[i];
      if (quote) {
        if (c == '\\' && i + 1 < inner.size()) cur.push_back(inner[++i]);
        else if (c == quote) quote = 0;
        else cur.push_back(c);
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == ',') {
        if (!cur.empty()) out.push_back(cur), cur.clear();
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) out.push_back(cur);
  }
  if (out.empty() && !ev.args.empty()) out.push_back(strip_arg_quotes(ev.args[0]));
  return out;
}

inline bool is_exec(const SyscallEvent& ev) {
  return ev.name == "execve" || ev.name == "execv" || ev.name == "execveat";
}

inline bool is_open(const SyscallEvent& ev) {
  return ev.name == "open" || ev.name == "openat" || ev.name == "creat";
}

inline std::string first_path_arg(const SyscallEvent& ev) {
  for (const auto& a : ev.args)
    if (!a.empty() && (a.front() == '"' || a.front() == '\'')) return strip_arg_quotes(a);
  return {};
}

inline void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (!s.empty() && std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace detail

// Keyword and behavior rules over a parsed trace. Each event contributes at
// most one finding per category, so overlapping keywords inside one category
// cannot double-report a single call.
inline BehaviorReport analyze_behavior(const std::vector<SyscallEvent>& events,
                                       const Rulesets& rules = default_rulesets()) {
  BehaviorReport report;
  report.process_tree = build_process_tree(events);
  report.event_count = events.size();

  static const std::regex tracerpid_path(R"(/proc/(self|\d+)/status)");
  static const char* hypervisors[] = {"QEMU", "VMWare", "VirutalBox", "VirtualBox", "KVM"};

  // descriptor table rebuilt from open/close return values, per pid
  std::map<std::pair<int, long>, std::string> fd_paths;

  for (const auto& ev : events) {
    const std::string joined = ev.joined_args();
    auto argv = detail::is_exec(ev) ? detail::exec_argv(ev) : std::vector<std::string>{};
    std::string argv0 = argv.empty() ? "" : detail::basename_of(argv[0]);

    // file lifecycle
    if (detail::is_open(ev) &&
        (ev.name == "creat" || joined.find("O_CREAT") != std::string::npos))
      detail::push_unique(report.files_created, detail::first_path_arg(ev));
    if (ev.name == "mkdir" || ev.name == "mkdirat" || ev.name == "mknod")
      detail::push_unique(report.files_created, detail::first_path_arg(ev));
    if (ev.name == "unlink" || ev.name == "unlinkat" || ev.name == "rmdir")
      detail::push_unique(report.files_removed, detail::first_path_arg(ev));
    if (detail::is_exec(ev) && (argv0 == "rm" || argv0 == "rmdir"))
      for (size_t i = 1; i < argv.size(); i++)
        if (argv[i].rfind("-", 0) != 0) detail::push_unique(report.files_removed, argv[i]);

    // downloaded-binary evidence: writes whose data leads with the ELF magic
    if (detail::is_open(ev)) {
      if (auto fd = retval_int(ev); fd && *fd >= 0)
        fd_paths[{ev.pid, *fd}] = detail::first_path_arg(ev);
    } else if (ev.name == "close" && !ev.args.empty()) {
      fd_paths.erase({ev.pid, std::strtol(ev.args[0].c_str(), nullptr, 10)});
    } else if ((ev.name == "write" || ev.name == "pwrite" || ev.name == "pwrite64") &&
               ev.args.size() >= 2) {
      const std::string& data = ev.args[1];
      if (data.rfind("\"\\177ELF", 0) == 0 || data.rfind("\"\\x7fELF", 0) == 0) {
        long fd = std::strtol(ev.args[0].c_str(), nullptr, 10);
        auto it = fd_paths.find({ev.pid, fd});
        if (it != fd_paths.end()) detail::push_unique(report.elf_files_written, it->second);
      }
    }

    // persistence: configured keywords plus kernel-module loading
    if (ev.name == "init_module" || ev.name == "finit_module") {
      report.kernel_module_loaded = true;
      report.persistence.push_back({"kernel_module", ev.name, ev.seq});
    } else if (auto kw = rules.persistence.first_match(joined); !kw.empty()) {
      report.persistence.push_back({"persistence_path", kw, ev.seq});
    }

    // anti-forensics
    if (ev.name == "prctl" && !ev.args.empty() && ev.args[0] == "PR_SET_NAME") {
      std::string newname = ev.args.size() >= 2 ? strip_arg_quotes(ev.args[1]) : "";
      report.anti_forensics.push_back({"process_renaming", newname, ev.seq});
    } else if (ev.name == "unlink" || ev.name == "unlinkat" || ev.name == "rmdir") {
      report.anti_forensics.push_back({"file_removal", detail::first_path_arg(ev), ev.seq});
    } else if (detail::is_exec(ev) && (argv0 == "rm" || argv0 == "rmdir")) {
      report.anti_forensics.push_back({"file_removal", argv0, ev.seq});
    } else if (detail::is_exec(ev) && joined.find("iptables") != std::string::npos) {
      report.anti_forensics.push_back({"firewall_change", "iptables", ev.seq});
    } else if (auto kw = rules.injection.first_match(joined); !kw.empty()) {
      report.anti_forensics.push_back({"process_injection", kw, ev.seq});
    }

    // anti-debugging
    if (joined.find("PTRACE_TRACEME") != std::string::npos) {
      report.anti_debug.push_back({"ptrace_traceme", "PTRACE_TRACEME", ev.seq});
    } else if (ev.name == "ptrace" && joined.find("PTRACE_ATTACH") != std::string::npos) {
      report.anti_debug.push_back({"ptrace_attach", "PTRACE_ATTACH", ev.seq});
    } else if (auto kw = rules.anti_debug.first_match(joined); !kw.empty()) {
      report.anti_debug.push_back({"debugger_probe", kw, ev.seq});
    } else if (std::smatch m; std::regex_search(joined, m, tracerpid_path)) {
      report.anti_debug.push_back({"tracerpid_check", m.str(), ev.seq});
    }

    // anti-sandbox
    if (auto kw = rules.anti_sandbox.first_match(joined); !kw.empty()) {
      bool hyper = false;
      for (auto* h : hypervisors) hyper = hyper || kw == h;
      report.anti_sandbox.push_back({hyper ? "hypervisor_keyword" : "vm_probe", kw, ev.seq});
    } else if ((ev.name == "mount" || ev.name == "umount" || ev.name == "umount2") &&
               joined.find("/proc") != std::string::npos) {
      report.anti_sandbox.push_back({"proc_mount", detail::first_path_arg(ev), ev.seq});
    } else if (detail::is_exec(ev) && argv0 == "ps") {
      report.anti_sandbox.push_back({"process_enumeration", "ps", ev.seq});
    } else if (detail::is_open(ev) && detail::first_path_arg(ev) == "/proc") {
      report.anti_sandbox.push_back({"process_enumeration", "/proc", ev.seq});
    } else if (joined.find("/etc/rc") != std::string::npos) {
      report.anti_sandbox.push_back({"startup_service_read", "/etc/rc", ev.seq});
    } else if (detail::is_exec(ev) && argv0 == "crontab" &&
               std::find(argv.begin(), argv.end(), "-l") != argv.end()) {
      report.anti_sandbox.push_back({"cron_listing", "crontab -l", ev.seq});
    }
  }
  return report;
}

inline nlohmann::json to_json(const Finding& f) {
  return {{"technique", f.technique}, {"evidence", f.evidence}, {"seq", f.seq}};
}

inline nlohmann::json to_json(const BehaviorReport& r) {
  auto list = [](const std::vector<Finding>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (auto& f : v) out.push_back(to_json(f));
    return out;
  };
  return {
      {"process_tree", to_json(r.process_tree)},
      {"files_created", r.files_created},
      {"files_removed", r.files_removed},
      {"elf_files_written", r.elf_files_written},
      {"persistence", list(r.persistence)},
      {"anti_forensics", list(r.anti_forensics)},
      {"anti_debug", list(r.anti_debug)},
      {"anti_sandbox", list(r.anti_sandbox)},
      {"kernel_module_loaded", r.kernel_module_loaded},
      {"event_count", r.event_count},
  };
}

inline BehaviorReport behavior_report_from_json(const nlohmann::json& j) {
  BehaviorReport r;
  auto list = [](const nlohmann::json& arr) {
    std::vector<Finding> out;
    for (auto& f : arr)
      out.push_back({f.at("technique"), f.at("evidence"), f.at("seq").get<size_t>()});
    return out;
  };
  for (auto& n : j.at("process_tree").at("nodes")) {
    ProcessNode node;
    node.pid = n.at("pid").get<int>();
    node.event_seqs = n.value("events", std::vector<size_t>{});
    if (n.contains("parent_pid")) node.parent_pid = n.at("parent_pid").get<int>();
    if (n.contains("assigned_name")) node.assigned_name = n.at("assigned_name").get<std::string>();
    r.process_tree.nodes[node.pid] = std::move(node);
  }
  r.process_tree.warnings =
      j.at("process_tree").at("warnings").get<std::vector<std::string>>();
  r.files_created = j.at("files_created").get<std::vector<std::string>>();
  r.files_removed = j.at("files_removed").get<std::vector<std::string>>();
  r.elf_files_written = j.value("elf_files_written", std::vector<std::string>{});
  r.persistence = list(j.at("persistence"));
  r.anti_forensics = list(j.at("anti_forensics"));
  r.anti_debug = list(j.at("anti_debug"));
  r.anti_sandbox = list(j.at("anti_sandbox"));
  r.kernel_module_loaded = j.at("kernel_module_loaded").get<bool>();
  r.event_count = j.at("event_count").get<size_t>();
  return r;
}

}  // namespace trapline::trace
