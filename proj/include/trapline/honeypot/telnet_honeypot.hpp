#pragma once

// Telnet capture service: login prompt, credential check against the config
// list, and a small emulated busybox shell. The command table is a fixed
// approximation; unknown commands get the stock "applet not found" line.

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "trapline/core/clock.hpp"
#include "trapline/honeypot/extractor.hpp"
#include "trapline/honeypot/records.hpp"
#include "trapline/honeypot/servers.hpp"

namespace trapline::honeypot {

using RecordSink = std::function<void(const AttackRecord&)>;

namespace detail {

inline std::string trim_ws(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) a++;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) b--;
  return s.substr(a, b - a);
}

inline std::string first_token(const std::string& s) {
  size_t sp = s.find(' ');
  return sp == std::string::npos ? s : s.substr(0, sp);
}

inline std::string command_basename(const std::string& tok) {
  size_t slash = tok.rfind('/');
  return slash == std::string::npos ? tok : tok.substr(slash + 1);
}

}  // namespace detail

// Session logic without the socket, so it can be driven line by line.
class TelnetShell {
 public:
  explicit TelnetShell(const HoneypotConfig& cfg) : cfg_(cfg) {}

  std::string greeting() const {
    return "\r\n" + cfg_.hostname + " login: ";
  }

  bool logged_in() const { return state_ == ShellState::shell; }
  bool closed() const { return state_ == ShellState::closed; }

  // Feeds one attacker line. Returns the bytes to answer, or nullopt once the
  // session should close.
  std::optional<std::string> on_line(const std::string& raw) {
    std::string line = detail::trim_ws(raw);
    switch (state_) {
      case ShellState::login_user:
        user_ = line;
        state_ = ShellState::login_password;
        return std::string("Password: ");
      case ShellState::login_password: {
        credentials_ = CredentialPair{user_, line};
        bool ok = std::find(cfg_.accepted_credentials.begin(), cfg_.accepted_credentials.end(),
                            user_ + ":" + line) != cfg_.accepted_credentials.end();
        if (ok) {
          state_ = ShellState::shell;
          return "\r\n" + cfg_.banner + "\r\n\r\n" + prompt();
        }
        if (++login_attempts_ >= 3) {
          state_ = ShellState::closed;
          return std::nullopt;
        }
        state_ = ShellState::login_user;
        return "\r\nLogin incorrect\r\n" + cfg_.hostname + " login: ";
      }
      case ShellState::shell:
        return run_command(line);
      case ShellState::closed:
        return std::nullopt;
    }
    return std::nullopt;
  }

  AttackRecord finish(const std::string& attacker_ip, uint16_t attacker_port,
                      const std::string& timestamp) const {
    AttackRecord rec;
    rec.honeypot_kind = to_string(cfg_.kind);
    rec.attacker_ip = attacker_ip;
    rec.attacker_port = attacker_port;
    rec.timestamp = timestamp;
    rec.payload = extractor_.payload();
    rec.credentials = credentials_;
    return rec;
  }

 private:
  enum class ShellState { login_user, login_password, shell, closed };

  std::string prompt() const { return cfg_.hostname + ":~# "; }

  std::string reply(const std::string& body) const {
    return body.empty() ? prompt() : body + "\r\n" + prompt();
  }

  std::optional<std::string> run_command(const std::string& line) {
    if (line.empty()) return prompt();
    extractor_.scan_text(line);
    if (extractor_.scan_hex_command(line)) return prompt();

    std::string tok = detail::first_token(line);
    std::string base = detail::command_basename(tok);
    std::string args = detail::trim_ws(line.substr(tok.size()));

    if (base == "exit" || base == "quit" || base == "logout") {
      state_ = ShellState::closed;
      return std::nullopt;
    }
    if (base == "enable" || base == "system" || base == "shell" || base == "sh" ||
        base == "ash" || base == "cd" || base == "chmod" || base == "rm" ||
        base == "cp" || base == "mv" || base == "kill" || tok.rfind("./", 0) == 0)
      return reply("");
    if (base == "cat") {
      if (args == "/proc/cpuinfo") return reply(cpuinfo());
      return reply("cat: can't open '" + args + "': No such file or directory");
    }
    if (base == "uname") {
      if (args.find('a') != std::string::npos)
        return reply("Linux " + cfg_.hostname + " 4.4.50 #1 SMP PREEMPT armv7l GNU/Linux");
      if (args == "-m") return reply("armv7l");
      return reply("Linux");
    }
    if (base == "busybox") {
      if (args.empty())
        return reply(cfg_.banner + "\r\nUsage: busybox [function [arguments]...]");
      return reply(detail::first_token(args) + ": applet not found");
    }
    if (base == "echo") return reply(echo_text(args));
    if (base == "wget" || base == "curl" || base == "tftp")
      return reply("Connecting... done.");
    if (base == "help")
      return reply("Built-in commands:\r\n. : cd echo exit help sh");
    return reply(base + ": applet not found");
  }

  std::string cpuinfo() const {
    return "Processor\t: ARMv7 Processor rev 2 (v7l)\r\n"
           "BogoMIPS\t: 997.78\r\n"
           "Features\t: swp half thumb fastmult vfp edsp neon vfpv3\r\n"
           "CPU implementer\t: 0x41\r\n"
           "CPU architecture: 7\r\n"
           "Hardware\t: Generic DT based system";
  }

  static std::string echo_text(std::string args) {
    while (args.rfind("-", 0) == 0) {
      size_t sp = args.find(' ');
      if (sp == std::string::npos) return "";
      args = detail::trim_ws(args.substr(sp));
    }
    if (args.size() >= 2 && (args.front() == '\'' || args.front() == '"') &&
        args.back() == args.front())
      args = args.substr(1, args.size() - 2);
    return args;
  }

  HoneypotConfig cfg_;
  ShellState state_ = ShellState::login_user;
  std::string user_;
  std::optional<CredentialPair> credentials_;
  int login_attempts_ = 0;
  SessionExtractor extractor_;
};

class TelnetHoneypot {
 public:
  TelnetHoneypot(HoneypotConfig cfg, RecordSink sink)
      : cfg_(std::move(cfg)), sink_(std::move(sink)) {}

  ~TelnetHoneypot() { stop(); }

  uint16_t start(const std::string& host = "0.0.0.0",
                 std::optional<uint16_t> port = std::nullopt) {
    listener_.open(port.value_or(cfg_.listen_port), host);
    accept_thread_ = std::thread([this] { accept_loop(); });
    return listener_.port();
  }

  uint16_t port() const { return listener_.port(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    listener_.close();
    {
      std::lock_guard<std::mutex> lk(mu_);
      for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> sessions;
    {
      std::lock_guard<std::mutex> lk(mu_);
      sessions.swap(sessions_);
    }
    for (auto& t : sessions)
      if (t.joinable()) t.join();
  }

 private:
  void accept_loop() {
    for (;;) {
      std::string ip;
      uint16_t peer_port = 0;
      int fd = listener_.accept_fd(&ip, &peer_port);
      if (fd < 0) return;
      std::lock_guard<std::mutex> lk(mu_);
      session_fds_.push_back(fd);
      sessions_.emplace_back([this, fd, ip, peer_port] { session(fd, ip, peer_port); });
    }
  }

  void session(int fd, const std::string& ip, uint16_t peer_port) {
    TelnetShell shell(cfg_);
    write_all(fd, shell.greeting());

    std::string acc;
    int iac_skip = 0;
    char buf[1024];
    bool open = true;
    while (open) {
      ssize_t n = read_some(fd, buf, sizeof buf, cfg_.session_timeout_sec * 1000);
      if (n <= 0) break;  // timeout or disconnect ends with a partial record
      for (ssize_t i = 0; i < n; i++) {
        unsigned char c = static_cast<unsigned char>(buf[i]);
        if (iac_skip > 0) {
          iac_skip--;
          continue;
        }
        if (c == 0xff) {  // telnet option negotiation, skip command + option
          iac_skip = 2;
          continue;
        }
        if (c == '\r' || c == '\0') continue;
        acc.push_back(static_cast<char>(c));
      }
      size_t nl;
      while (open && (nl = acc.find('\n')) != std::string::npos) {
        std::string line = acc.substr(0, nl);
        acc.erase(0, nl + 1);
        auto out = shell.on_line(line);
        if (!out) {
          open = false;
          break;
        }
        write_all(fd, *out);
      }
    }

    dispatch(shell.finish(ip, peer_port, now_iso()));
    {
      std::lock_guard<std::mutex> lk(mu_);
      session_fds_.erase(std::remove(session_fds_.begin(), session_fds_.end(), fd),
                         session_fds_.end());
    }
    ::close(fd);
  }

  void dispatch(const AttackRecord& rec) {
    if (sink_) sink_(rec);
  }

  HoneypotConfig cfg_;
  RecordSink sink_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<std::thread> sessions_;
  std::vector<int> session_fds_;
};

}  // namespace trapline::honeypot
