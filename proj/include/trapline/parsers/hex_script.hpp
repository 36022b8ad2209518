#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trapline/core/bytes.hpp"
#include "trapline/core/error.hpp"
#include "trapline/elf/elf.hpp"

namespace trapline::parsers {

// One decoded echo/printf chunk plus where it was headed on the victim.
struct HexChunk {
  Bytes bytes;
  std::string target;  // redirection target, may be empty
  bool append = false; // ">>" vs ">"
};

struct HexStringScript {
  std::vector<HexChunk> chunks;
  std::string target_filename;  // target of the final reassembled file
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) a++;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) b--;
  return std::string(s.substr(a, b - a));
}

// Decodes a run of \xNN escapes; anything else in the body rejects the chunk.
inline std::optional<Bytes> decode_escapes(std::string_view body) {
  Bytes out;
  size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '\\' && i + 3 < body.size() + 1 && i + 3 <= body.size() &&
        (body[i + 1] == 'x' || body[i + 1] == 'X')) {
      if (i + 4 > body.size()) return std::nullopt;
      int hi = hex_nibble(body[i + 2]), lo = hex_nibble(body[i + 3]);
      if (hi < 0 || lo < 0) return std::nullopt;
      out.push_back(uint8_t(hi << 4 | lo));
      i += 4;
    } else {
      return std::nullopt;
    }
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace detail

// Recognizes the echo-style transfer grammar:
//   echo [-ne|-en|-e|-n] '<\xNN...>' [> file | >> file]
//   printf '<\xNN...>' [> file | >> file]
// Commands may be separated by newlines or ';'. Other transports are not
// decoded here.
inline HexStringScript parse_hex_script(const std::string& text) {
  HexStringScript script;
  std::string cur;
  std::vector<std::string> commands;
  for (char c : text) {
    if (c == '\n' || c == ';') {
      commands.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  commands.push_back(cur);

  for (auto& raw : commands) {
    std::string cmd = detail::trim(raw);
    bool is_echo = cmd.rfind("echo", 0) == 0;
    bool is_printf = cmd.rfind("printf", 0) == 0;
    if (!is_echo && !is_printf) continue;
    std::string rest = detail::trim(cmd.substr(is_echo ? 4 : 6));

    // strip echo flags
    while (rest.rfind("-", 0) == 0) {
      auto sp = rest.find(' ');
      if (sp == std::string::npos) break;
      std::string flag = rest.substr(0, sp);
      if (flag != "-n" && flag != "-e" && flag != "-ne" && flag != "-en") break;
      rest = detail::trim(rest.substr(sp));
    }

    // split off redirection
    HexChunk chunk;
    auto redir = rest.rfind('>');
    if (redir != std::string::npos) {
      size_t start = redir;
      chunk.append = redir > 0 && rest[redir - 1] == '>';
      if (chunk.append) start--;
      chunk.target = detail::trim(rest.substr(redir + 1));
      rest = detail::trim(rest.substr(0, start));
    }

    // strip quotes
    if (rest.size() >= 2 && (rest.front() == '\'' || rest.front() == '"') &&
        rest.back() == rest.front()) {
      rest = rest.substr(1, rest.size() - 2);
    }

    auto bytes = detail::decode_escapes(rest);
    if (!bytes) continue;
    chunk.bytes = std::move(*bytes);
    if (!chunk.target.empty()) script.target_filename = chunk.target;
    script.chunks.push_back(std::move(chunk));
  }
  return script;
}

// Full hex-string submission path: decode the chunks, concatenate in order,
// and validate the result as ELF.
inline elf::ElfImage decode_hex_script(const std::string& text, std::string_view filename = "") {
  HexStringScript script = parse_hex_script(text);
  if (script.chunks.empty()) fail(ErrorKind::invalid_input, "no decodable hex chunks");
  Bytes assembled;
  for (const auto& c : script.chunks)
    assembled.insert(assembled.end(), c.bytes.begin(), c.bytes.end());
  std::string name = filename.empty() ? script.target_filename : std::string(filename);
  auto img = elf::parse_elf(std::move(assembled), name);
  if (!img.valid)
    fail(ErrorKind::invalid_input, "hex chunks do not assemble to a valid ELF: " + img.error);
  return img;
}

// Inverse transform used by fixtures and the round-trip properties: renders
// bytes as a sequence of echo commands with the given chunk size.
inline std::string encode_hex_script(std::span<const uint8_t> data, size_t chunk_size,
                                     const std::string& target = "upd") {
  if (chunk_size == 0) chunk_size = data.size() ? data.size() : 1;
  std::ostringstream out;
  for (size_t off = 0; off < data.size(); off += chunk_size) {
    size_t n = std::min(chunk_size, data.size() - off);
    out << "echo -ne '";
    for (size_t i = 0; i < n; i++) {
      static const char* digits = "0123456789abcdef";
      uint8_t b = data[off + i];
      out << "\\x" << digits[b >> 4] << digits[b & 0xf];
    }
    out << "' " << (off == 0 ? ">" : ">>") << " " << target << "\n";
  }
  return out.str();
}

// Splits data into random-sized chunks (at least one) and encodes them; used
// by the round-trip property tests.
inline std::string encode_hex_script_random_chunks(std::span<const uint8_t> data,
                                                   DeterministicRng& rng,
                                                   const std::string& target = "upd") {
  std::ostringstream out;
  size_t off = 0;
  bool first = true;
  while (off < data.size()) {
    size_t n = 1 + rng.next_below(std::max<size_t>(1, data.size() - off));
    n = std::min(n, data.size() - off);
    out << "echo -ne '";
    for (size_t i = 0; i < n; i++) {
      static const char* digits = "0123456789abcdef";
      uint8_t b = data[off + i];
      out << "\\x" << digits[b >> 4] << digits[b & 0xf];
    }
    out << "' " << (first ? ">" : ">>") << " " << target << "\n";
    first = false;
    off += n;
  }
  return out.str();
}

// Reassembled bytes without ELF validation; the honeypots use this to hand
// hex payloads to the submission API.
inline Bytes assemble_hex_script(const std::string& text) {
  Bytes out;
  for (const auto& c : parse_hex_script(text).chunks)
    out.insert(out.end(), c.bytes.begin(), c.bytes.end());
  return out;
}

}  // namespace trapline::parsers
