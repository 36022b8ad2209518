#pragma once

// Minimal blocking TCP plumbing for the honeypots. Exploit traffic is rarely
// well-formed, so the HTTP side reads raw bytes instead of going through a
// strict request parser.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <string>

#include "trapline/core/error.hpp"

namespace trapline::honeypot {

class TcpListener {
 public:
  TcpListener() = default;

  // Binds and listens; port 0 picks an ephemeral port. Throws on failure.
  void open(uint16_t port, const std::string& host = "0.0.0.0") {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) fail(ErrorKind::io_error, "socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
      fail(ErrorKind::invalid_input, "bad listen address: " + host);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(fd_);
      fd_ = -1;
      fail(ErrorKind::io_error, "cannot bind port " + std::to_string(port));
    }
    if (::listen(fd_, 16) != 0) {
      ::close(fd_);
      fd_ = -1;
      fail(ErrorKind::io_error, "listen() failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  ~TcpListener() { close(); }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const { return port_; }
  bool is_open() const { return fd_ >= 0; }

  // Blocks for the next connection. Returns -1 once the listener is closed.
  int accept_fd(std::string* peer_ip, uint16_t* peer_port) {
    sockaddr_in peer{};
    socklen_t len = sizeof peer;
    int fd = ::accept(fd_, reinterpret_cast<sockaddr*>(&peer), &len);
    if (fd < 0) return -1;
    char buf[INET_ADDRSTRLEN] = {0};
    ::inet_ntop(AF_INET, &peer.sin_addr, buf, sizeof buf);
    if (peer_ip) *peer_ip = buf;
    if (peer_port) *peer_port = ntohs(peer.sin_port);
    return fd;
  }

  void close() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

inline bool write_all(int fd, std::string_view text) {
  size_t off = 0;
  while (off < text.size()) {
    ssize_t n = ::send(fd, text.data() + off, text.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

// poll + recv. Returns bytes read, 0 on orderly close, -1 on timeout or error.
inline ssize_t read_some(int fd, char* buf, size_t cap, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  int r = ::poll(&p, 1, timeout_ms);
  if (r <= 0) return -1;
  ssize_t n = ::recv(fd, buf, cap, 0);
  return n < 0 ? -1 : n;
}

}  // namespace trapline::honeypot
