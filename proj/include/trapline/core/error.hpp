#pragma once

#include <stdexcept>
#include <string>

namespace trapline {

enum class ErrorKind {
  invalid_input,   // malformed payload, bad URL, corrupt file
  not_found,       // unknown id / missing resource
  conflict,        // operation not valid in the current state
  io_error,        // filesystem problems
  network_error,   // fetch failures, timeouts
  unsupported,     // valid input we deliberately do not handle
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::io_error: return "io_error";
    case ErrorKind::network_error: return "network_error";
    default: return "unsupported";
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace trapline
