#pragma once

// Composable synthetic syscall traces in the canonical "PID name(args) = ret"
// form the trace parser reads. Scenarios pick paths and arguments; the builder
// keeps pids and descriptor numbers consistent.

#include <string>
#include <vector>

namespace trapline::fixtures {

class TraceBuilder {
 public:
  explicit TraceBuilder(int pid = 100) : pid_(pid) {}

  TraceBuilder& raw(const std::string& line) {
    lines_.push_back(line);
    return *this;
  }

  TraceBuilder& call(const std::string& name, const std::string& args,
                     const std::string& ret = "0") {
    return raw(std::to_string(pid_) + " " + name + "(" + args + ") = " + ret);
  }

  TraceBuilder& open_read(const std::string& path) {
    int fd = next_fd_++;
    call("open", "\"" + path + "\", O_RDONLY", std::to_string(fd));
    call("read", std::to_string(fd) + ", \"x\", 1", "1");
    call("close", std::to_string(fd));
    return *this;
  }

  TraceBuilder& open_write(const std::string& path, const std::string& data = "x") {
    int fd = next_fd_++;
    call("open", "\"" + path + "\", O_WRONLY|O_CREAT, 0755", std::to_string(fd));
    call("write", std::to_string(fd) + ", \"" + data + "\", " + std::to_string(data.size()),
         std::to_string(data.size()));
    call("close", std::to_string(fd));
    return *this;
  }

  TraceBuilder& unlink_path(const std::string& path) {
    return call("unlink", "\"" + path + "\"");
  }

  TraceBuilder& rename_process(const std::string& name) {
    return call("prctl", "PR_SET_NAME, \"" + name + "\"");
  }

  TraceBuilder& ptrace_traceme() {
    return call("ptrace", "PTRACE_TRACEME, 0, 0, 0");
  }

  TraceBuilder& probe_file(const std::string& path) {
    return call("open", "\"" + path + "\", O_RDONLY", "-1 ENOENT");
  }

  TraceBuilder& connect_tcp(const std::string& ip, int port) {
    int fd = next_fd_++;
    call("socket", "AF_INET, SOCK_STREAM, IPPROTO_IP", std::to_string(fd));
    call("connect",
         std::to_string(fd) + ", {sa_family=AF_INET, sin_port=htons(" + std::to_string(port) +
             "), sin_addr=inet_addr(\"" + ip + "\")}, 16");
    return *this;
  }

  TraceBuilder& execve_file(const std::string& path) {
    return call("execve", "\"" + path + "\", [\"" + path + "\"], 0x0");
  }

  TraceBuilder& chmod_file(const std::string& path) {
    return call("chmod", "\"" + path + "\", 0777");
  }

  // parent forks n children; each child immediately exits
  TraceBuilder& fork_chain(int n) {
    for (int i = 0; i < n; i++) {
      int child = next_pid_++;
      call("fork", "", std::to_string(child));
      lines_.push_back(std::to_string(child) + " exit_group(0) = ?");
    }
    return *this;
  }

  // a stalled run: nothing but restart_syscall, the shape of a crashed sample
  TraceBuilder& restart_run(int count) {
    for (int i = 0; i < count; i++)
      call("restart_syscall", "<... resuming interrupted call ...>", "-1 EINTR");
    return *this;
  }

  // neutral padding so short scenarios still clear the minimum-event bar
  TraceBuilder& benign_padding(int events_of_three = 1) {
    for (int i = 0; i < events_of_three; i++) open_read("/etc/hosts");
    return *this;
  }

  TraceBuilder& exit(int code = 0) {
    return call("exit_group", std::to_string(code), "?");
  }

  std::string build() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  int pid_;
  int next_pid_ = 101;
  int next_fd_ = 3;
  std::vector<std::string> lines_;
};

}  // namespace trapline::fixtures
