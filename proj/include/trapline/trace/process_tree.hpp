#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "trapline/trace/events.hpp"

namespace trapline::trace {

struct ProcessNode {
  int pid = 0;
  std::optional<int> parent_pid;
  std::optional<std::string> assigned_name;  // via prctl PR_SET_NAME
  std::vector<size_t> event_seqs;
};

struct ProcessTree {
  std::map<int, ProcessNode> nodes;
  std::vector<std::string> warnings;

  std::vector<int> roots() const {
    std::vector<int> out;
    for (auto& [pid, node] : nodes)
      if (!node.parent_pid) out.push_back(pid);
    return out;
  }

  size_t depth() const {
    size_t best = 0;
    for (auto& [pid, node] : nodes) {
      size_t d = 1;
      auto cur = node.parent_pid;
      while (cur) {
        d++;
        auto it = nodes.find(*cur);
        cur = it == nodes.end() ? std::nullopt : it->second.parent_pid;
        if (d > nodes.size()) break;  // defensive; edges are kept acyclic
      }
      best = std::max(best, d);
    }
    return best;
  }
};

namespace detail {

inline bool is_spawn(const std::string& name) {
  return name == "fork" || name == "vfork" || name == "clone" || name == "clone3";
}

inline bool creates_cycle(const ProcessTree& t, int parent, int child) {
  auto cur = std::optional<int>(parent);
  while (cur) {
    if (*cur == child) return true;
    auto it = t.nodes.find(*cur);
    cur = it == t.nodes.end() ? std::nullopt : it->second.parent_pid;
  }
  return false;
}

}  // namespace detail

// Partitions events by pid and derives child edges from spawn-call return
// values. A second spawn reporting an already-parented child is recorded as a
// warning and the latest edge wins.
inline ProcessTree build_process_tree(const std::vector<SyscallEvent>& events) {
  ProcessTree tree;
  for (const auto& ev : events) {
    auto& node = tree.nodes[ev.pid];
    node.pid = ev.pid;
    node.event_seqs.push_back(ev.seq);

    if (detail::is_spawn(ev.name)) {
      if (auto child = retval_int(ev); child && *child > 0) {
        int cpid = int(*child);
        auto& cnode = tree.nodes[cpid];
        cnode.pid = cpid;
        if (cnode.parent_pid && *cnode.parent_pid != ev.pid)
          tree.warnings.push_back("pid " + std::to_string(cpid) +
                                  " spawned twice; keeping parent " + std::to_string(ev.pid));
        if (detail::creates_cycle(tree, ev.pid, cpid)) {
          tree.warnings.push_back("spawn edge " + std::to_string(ev.pid) + "->" +
                                  std::to_string(cpid) + " would loop; dropped");
        } else {
          cnode.parent_pid = ev.pid;
        }
      }
    }

    if (ev.name == "prctl" && !ev.args.empty() && ev.args[0] == "PR_SET_NAME") {
      if (ev.args.size() >= 2) node.assigned_name = strip_arg_quotes(ev.args[1]);
    }
  }
  return tree;
}

inline nlohmann::json to_json(const ProcessTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (auto& [pid, node] : t.nodes) {
    nlohmann::json n{{"pid", pid}, {"events", node.event_seqs}};
    if (node.parent_pid) n["parent_pid"] = *node.parent_pid;
    if (node.assigned_name) n["assigned_name"] = *node.assigned_name;
    nodes.push_back(std::move(n));
  }
  return {{"nodes", nodes}, {"warnings", t.warnings}};
}

}  // namespace trapline::trace
