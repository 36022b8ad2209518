#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trapline {

using Bytes = std::vector<uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const uint8_t> b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

// Bounds-checked scalar reads. Every on-disk format in this codebase goes
// through these; an out-of-range offset yields nullopt, never UB.
inline std::optional<uint8_t> read_u8(std::span<const uint8_t> b, size_t off) {
  if (off >= b.size()) return std::nullopt;
  return b[off];
}

inline std::optional<uint16_t> read_u16(std::span<const uint8_t> b, size_t off, bool big_endian) {
  if (off + 2 > b.size()) return std::nullopt;
  return big_endian ? uint16_t(b[off] << 8 | b[off + 1])
                    : uint16_t(b[off + 1] << 8 | b[off]);
}

inline std::optional<uint32_t> read_u32(std::span<const uint8_t> b, size_t off, bool big_endian) {
  if (off + 4 > b.size()) return std::nullopt;
  uint32_t v = 0;
  if (big_endian) {
    v = uint32_t(b[off]) << 24 | uint32_t(b[off + 1]) << 16 | uint32_t(b[off + 2]) << 8 |
        uint32_t(b[off + 3]);
  } else {
    v = uint32_t(b[off + 3]) << 24 | uint32_t(b[off + 2]) << 16 | uint32_t(b[off + 1]) << 8 |
        uint32_t(b[off]);
  }
  return v;
}

inline std::optional<uint64_t> read_u64(std::span<const uint8_t> b, size_t off, bool big_endian) {
  auto hi = read_u32(b, big_endian ? off : off + 4, big_endian);
  auto lo = read_u32(b, big_endian ? off + 4 : off, big_endian);
  if (!hi || !lo) return std::nullopt;
  return uint64_t(*hi) << 32 | *lo;
}

inline void put_u16(Bytes& out, uint16_t v, bool big_endian) {
  if (big_endian) {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
  } else {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
  }
}

inline void put_u32(Bytes& out, uint32_t v, bool big_endian) {
  if (big_endian) {
    put_u16(out, uint16_t(v >> 16), true);
    put_u16(out, uint16_t(v), true);
  } else {
    put_u16(out, uint16_t(v), false);
    put_u16(out, uint16_t(v >> 16), false);
  }
}

inline void put_u64(Bytes& out, uint64_t v, bool big_endian) {
  if (big_endian) {
    put_u32(out, uint32_t(v >> 32), true);
    put_u32(out, uint32_t(v), true);
  } else {
    put_u32(out, uint32_t(v), false);
    put_u32(out, uint32_t(v >> 32), false);
  }
}

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Strict hex decode; fails on odd length or non-hex characters.
inline std::optional<Bytes> hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i + 1 < hex.size() || i + 1 == hex.size(); i += 2) {
    if (i + 1 >= hex.size()) break;
    int hi = hex_nibble(hex[i]), lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(uint8_t(hi << 4 | lo));
  }
  return out;
}

inline std::string hex_encode(std::span<const uint8_t> b) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (uint8_t v : b) {
    out.push_back(digits[v >> 4]);
    out.push_back(digits[v & 0xf]);
  }
  return out;
}

inline bool starts_with(std::span<const uint8_t> b, std::string_view magic) {
  if (b.size() < magic.size()) return false;
  return std::memcmp(b.data(), magic.data(), magic.size()) == 0;
}

// Small deterministic PRNG (xorshift64*) used wherever fixtures need
// reproducible byte streams. Not a stdlib engine on purpose: the output
// must stay bit-stable across platforms and library versions.
class DeterministicRng {
 public:
  explicit DeterministicRng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next() {
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  uint8_t next_byte() { return uint8_t(next() >> 32); }

  // Uniform in [0, bound).
  uint64_t next_below(uint64_t bound) { return bound ? next() % bound : 0; }

  Bytes bytes(size_t n) {
    Bytes out(n);
    for (auto& v : out) v = next_byte();
    return out;
  }

 private:
  uint64_t state_;
};

}  // namespace trapline
