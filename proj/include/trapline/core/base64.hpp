#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "trapline/core/bytes.hpp"

namespace trapline {

inline std::string base64_encode(std::span<const uint8_t> data) {
  static const char alphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    uint32_t n = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
    out += alphabet[n >> 18];
    out += alphabet[n >> 12 & 0x3f];
    out += alphabet[n >> 6 & 0x3f];
    out += alphabet[n & 0x3f];
  }
  if (i + 1 == data.size()) {
    uint32_t n = data[i] << 16;
    out += alphabet[n >> 18];
    out += alphabet[n >> 12 & 0x3f];
    out += "==";
  } else if (i + 2 == data.size()) {
    uint32_t n = data[i] << 16 | data[i + 1] << 8;
    out += alphabet[n >> 18];
    out += alphabet[n >> 12 & 0x3f];
    out += alphabet[n >> 6 & 0x3f];
    out += '=';
  }
  return out;
}

inline std::optional<Bytes> base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  Bytes out;
  uint32_t acc = 0;
  int bits = 0;
  size_t padding = 0;
  size_t significant = 0;
  for (char c : text) {
    if (c == '\n' || c == '\r') continue;
    significant++;
    if (c == '=') {
      padding++;
      continue;
    }
    if (padding) return std::nullopt;  // data after padding
    int v = value(c);
    if (v < 0) return std::nullopt;
    acc = acc << 6 | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<uint8_t>(acc >> bits & 0xff));
    }
  }
  // A leftover of 6 bits means the input length was 1 mod 4, never valid.
  if (significant % 4 != 0 || padding > 2 || bits >= 6) return std::nullopt;
  return out;
}

}  // namespace trapline
