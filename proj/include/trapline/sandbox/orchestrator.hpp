#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trapline/core/config.hpp"
#include "trapline/pcap/analyzer.hpp"
#include "trapline/sandbox/profiles.hpp"
#include "trapline/trace/behavior.hpp"

namespace trapline::sandbox {

struct ExecutionRequest {
  std::string sha256;
  VmProfile profile;
  int duration_sec = 60;
  std::string argument;  // passed to the sample's argv[1]
};

struct RawExecution {
  std::string trace_text;
  Bytes capture_bytes;
};

// The virtualization boundary. Implementations run a sample somehow and hand
// back whatever trace and capture came out; judging success happens here, not
// in the executor.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual RawExecution run(const ExecutionRequest& req) = 0;
};

// Replays pre-recorded runs from a fixture directory:
//   <root>/<sha256>/trace.txt                one recording for any profile
//   <root>/<sha256>/group1/trace.txt         per-group recordings
// with capture.pcap beside each trace. A missing recording behaves as a run
// that produced nothing, which the judge then fails.
class MockExecutor : public Executor {
 public:
  explicit MockExecutor(std::filesystem::path root) : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_))
      fail(ErrorKind::io_error, "executor fixture directory missing: " + root_.string());
  }

  RawExecution run(const ExecutionRequest& req) override {
    namespace fs = std::filesystem;
    fs::path grouped = root_ / req.sha256 / ("group" + std::to_string(req.profile.group));
    fs::path flat = root_ / req.sha256;
    fs::path dir = fs::exists(grouped / "trace.txt") ? grouped : flat;

    RawExecution out;
    if (std::ifstream in(dir / "trace.txt", std::ios::binary); in)
      out.trace_text.assign(std::istreambuf_iterator<char>(in), {});
    if (std::ifstream in(dir / "capture.pcap", std::ios::binary); in) {
      std::string raw((std::istreambuf_iterator<char>(in)), {});
      out.capture_bytes.assign(raw.begin(), raw.end());
    }
    return out;
  }

 private:
  std::filesystem::path root_;
};

// Adapts a callable, for tests that script per-attempt behaviour.
class FunctionExecutor : public Executor {
 public:
  using Fn = std::function<RawExecution(const ExecutionRequest&)>;
  explicit FunctionExecutor(Fn fn) : fn_(std::move(fn)) {}
  RawExecution run(const ExecutionRequest& req) override { return fn_(req); }

 private:
  Fn fn_;
};

struct Judgement {
  bool ok = false;
  std::vector<std::string> signals;
};

// A run counts as failed when it produced almost no events or got stuck in a
// restart loop. Both thresholds approximate behaviour observed in corrupt
// executions; real failure modes vary more than this.
inline Judgement judge_execution(const std::string& trace_text,
                                 const Thresholds& th = Thresholds{}) {
  Judgement j;
  std::vector<trace::SyscallEvent> events;
  try {
    events = trace::parse_trace(trace_text).events;
  } catch (const Error&) {
    j.signals.push_back("fewer than " + std::to_string(th.exec_min_events) + " parsed events");
    return j;
  }
  if (events.size() < th.exec_min_events) {
    j.signals.push_back("fewer than " + std::to_string(th.exec_min_events) + " parsed events");
    return j;
  }
  size_t run = 0, longest = 0;
  for (const auto& ev : events) {
    run = ev.name == "restart_syscall" ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  if (longest >= th.exec_restart_run) {
    j.signals.push_back("restart_syscall run of " + std::to_string(longest));
    return j;
  }
  j.ok = true;
  return j;
}

struct AttemptLog {
  VmProfile profile;
  bool ok = false;
  std::vector<std::string> signals;
};

struct ExecutionResult {
  VmProfile profile_used;
  std::string trace_text;
  Bytes capture_bytes;
  bool ok = false;
  std::vector<std::string> failure_signals;
  std::vector<AttemptLog> attempts;
};

// Runs the sample on its selected machine and, when that fails from group 1,
// once more on the group-2 counterpart. Never more than two executor calls.
inline ExecutionResult execute_with_fallback(const std::string& sha256, const VmProfile& profile,
                                             int duration_sec, const std::string& argument,
                                             Executor& executor,
                                             const Thresholds& th = Thresholds{}) {
  auto attempt = [&](const VmProfile& p) {
    ExecutionResult r;
    r.profile_used = p;
    try {
      RawExecution raw = executor.run({sha256, p, duration_sec, argument});
      r.trace_text = std::move(raw.trace_text);
      r.capture_bytes = std::move(raw.capture_bytes);
      Judgement j = judge_execution(r.trace_text, th);
      r.ok = j.ok;
      r.failure_signals = std::move(j.signals);
    } catch (const Error& e) {
      r.ok = false;
      r.failure_signals.push_back(std::string("executor: ") + e.what());
    }
    r.attempts.push_back({p, r.ok, r.failure_signals});
    return r;
  };

  ExecutionResult first = attempt(profile);
  if (first.ok || profile.group != 1) return first;

  ExecutionResult second = attempt(group2_counterpart(profile));
  second.attempts.insert(second.attempts.begin(), first.attempts.begin(), first.attempts.end());
  return second;
}

// A sample is a dropper when its execution wrote a file that starts with the
// ELF magic and the capture shows an HTTP GET it could have come from. The
// matching request (by basename when possible, else the first one) names the
// stage-two URL.
inline std::optional<std::string> detect_dropper(const trace::BehaviorReport& behavior,
                                                 const pcap::NetworkReport& network) {
  if (behavior.elf_files_written.empty() || network.http_requests.empty()) return std::nullopt;

  auto url_of = [](const pcap::HttpRequest& r) {
    std::string path = r.uri.substr(0, r.uri.find_first_of("? "));
    return "http://" + r.host + path;
  };

  for (const auto& written : behavior.elf_files_written) {
    std::string base = written.substr(written.rfind('/') + 1);
    for (const auto& r : network.http_requests) {
      std::string path = r.uri.substr(0, r.uri.find_first_of("? "));
      if (!base.empty() && path.size() > base.size() &&
          path.compare(path.size() - base.size(), base.size(), base) == 0 &&
          path[path.size() - base.size() - 1] == '/')
        return url_of(r);
    }
  }
  return url_of(network.http_requests.front());
}

}  // namespace trapline::sandbox
