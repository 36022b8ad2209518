#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "trapline/core/bytes.hpp"

namespace trapline::elf {

enum class CpuArch { arm, mips, x86, x86_64, other };
enum class Endianness { little, big };
enum class Linking { static_linked, dynamic_linked };

inline const char* to_string(CpuArch a) {
  switch (a) {
    case CpuArch::arm: return "arm";
    case CpuArch::mips: return "mips";
    case CpuArch::x86: return "x86";
    case CpuArch::x86_64: return "x86_64";
    default: return "other";
  }
}

inline const char* to_string(Linking l) {
  return l == Linking::dynamic_linked ? "dynamic" : "static";
}

inline const char* to_string(Endianness e) {
  return e == Endianness::big ? "big" : "little";
}

inline std::optional<CpuArch> arch_from_string(std::string_view s) {
  if (s == "arm") return CpuArch::arm;
  if (s == "mips") return CpuArch::mips;
  if (s == "x86") return CpuArch::x86;
  if (s == "x86_64") return CpuArch::x86_64;
  if (s == "other") return CpuArch::other;
  return std::nullopt;
}

inline Linking linking_from_string(std::string_view s) {
  return s == "dynamic" ? Linking::dynamic_linked : Linking::static_linked;
}

// e_machine values for the architectures IoT bots are built for.
constexpr uint16_t kMachineArm = 0x28;
constexpr uint16_t kMachineMips = 0x08;
constexpr uint16_t kMachineX86 = 0x03;
constexpr uint16_t kMachineX86_64 = 0x3E;

constexpr uint32_t kPtDynamic = 2;
constexpr uint32_t kPtInterp = 3;
constexpr uint32_t kShtSymtab = 2;
constexpr uint32_t kShtNobits = 8;

struct Section {
  std::string name;
  uint32_t type = 0;
  uint64_t offset = 0;
  uint64_t size = 0;
};

struct ElfImage {
  Bytes bytes;
  bool valid = false;
  std::string error;  // set when valid is false

  CpuArch cpu_arch = CpuArch::other;
  std::optional<int> arm_version_hint;
  Endianness endianness = Endianness::little;
  Linking linking = Linking::static_linked;
  bool stripped = true;
  bool is_64bit = false;
  uint16_t header_size = 0;
  std::vector<Section> sections;

  // Section body, empty for SHT_NOBITS or out-of-range entries.
  std::span<const uint8_t> section_contents(const Section& s) const {
    if (s.type == kShtNobits || s.size == 0) return {};
    if (s.offset + s.size > bytes.size()) return {};
    return std::span<const uint8_t>(bytes).subspan(size_t(s.offset), size_t(s.size));
  }
};

// Version digit out of names like bot.arm7, x.armv5l, payload.arm4tl.
inline std::optional<int> arm_hint_from_filename(std::string_view filename) {
  std::string lower(filename);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  static const std::regex suffix(R"(arm(?:v)?([2-9])(?:t?l)?$)");
  std::smatch m;
  if (std::regex_search(lower, m, suffix)) return m[1].str()[0] - '0';
  return std::nullopt;
}

namespace detail {

inline ElfImage invalid(Bytes bytes, std::string why) {
  ElfImage img;
  img.bytes = std::move(bytes);
  img.valid = false;
  img.error = std::move(why);
  return img;
}

}  // namespace detail

// Parses the ELF header, program headers and section table. A file is valid
// only if the magic matches, the header fields parse, and every referenced
// table or section body lies inside the file.
inline ElfImage parse_elf(Bytes bytes, std::string_view filename = "") {
  std::span<const uint8_t> b(bytes);
  if (b.size() < 16 || !starts_with(b, "\x7f" "ELF"))
    return detail::invalid(std::move(bytes), "bad magic");

  uint8_t ei_class = b[4], ei_data = b[5];
  if (ei_class != 1 && ei_class != 2) return detail::invalid(std::move(bytes), "bad EI_CLASS");
  if (ei_data != 1 && ei_data != 2) return detail::invalid(std::move(bytes), "bad EI_DATA");

  ElfImage img;
  img.is_64bit = ei_class == 2;
  img.endianness = ei_data == 2 ? Endianness::big : Endianness::little;
  bool be = ei_data == 2;

  size_t ehsize = img.is_64bit ? 64 : 52;
  if (b.size() < ehsize) return detail::invalid(std::move(bytes), "truncated header");
  img.header_size = uint16_t(ehsize);

  auto machine = read_u16(b, 18, be).value();
  switch (machine) {
    case kMachineArm: img.cpu_arch = CpuArch::arm; break;
    case kMachineMips: img.cpu_arch = CpuArch::mips; break;
    case kMachineX86: img.cpu_arch = CpuArch::x86; break;
    case kMachineX86_64: img.cpu_arch = CpuArch::x86_64; break;
    default: img.cpu_arch = CpuArch::other; break;
  }

  uint64_t phoff, shoff;
  uint16_t phentsize, phnum, shentsize, shnum, shstrndx;
  if (img.is_64bit) {
    phoff = read_u64(b, 32, be).value();
    shoff = read_u64(b, 40, be).value();
    phentsize = read_u16(b, 54, be).value();
    phnum = read_u16(b, 56, be).value();
    shentsize = read_u16(b, 58, be).value();
    shnum = read_u16(b, 60, be).value();
    shstrndx = read_u16(b, 62, be).value();
  } else {
    phoff = read_u32(b, 28, be).value();
    shoff = read_u32(b, 32, be).value();
    phentsize = read_u16(b, 42, be).value();
    phnum = read_u16(b, 44, be).value();
    shentsize = read_u16(b, 46, be).value();
    shnum = read_u16(b, 48, be).value();
    shstrndx = read_u16(b, 50, be).value();
  }

  // Program headers: linking mode.
  if (phnum > 0) {
    size_t min_phent = img.is_64bit ? 56u : 32u;
    if (phentsize < min_phent || phoff + uint64_t(phnum) * phentsize > b.size())
      return detail::invalid(std::move(bytes), "program header table out of range");
    for (uint16_t i = 0; i < phnum; i++) {
      size_t off = size_t(phoff) + size_t(i) * phentsize;
      uint32_t p_type = read_u32(b, off, be).value();
      if (p_type == kPtInterp || p_type == kPtDynamic) img.linking = Linking::dynamic_linked;
    }
  }

  // Section table: optional, but if present it must be consistent.
  bool has_symtab = false;
  if (shoff != 0 && shnum > 0) {
    size_t min_shent = img.is_64bit ? 64u : 40u;
    if (shentsize < min_shent || shoff + uint64_t(shnum) * shentsize > b.size())
      return detail::invalid(std::move(bytes), "section header table out of range");
    if (shstrndx >= shnum) return detail::invalid(std::move(bytes), "bad shstrndx");

    struct RawShdr {
      uint32_t name_off, type;
      uint64_t offset, size;
    };
    std::vector<RawShdr> raw(shnum);
    for (uint16_t i = 0; i < shnum; i++) {
      size_t off = size_t(shoff) + size_t(i) * shentsize;
      RawShdr& s = raw[i];
      s.name_off = read_u32(b, off, be).value();
      s.type = read_u32(b, off + 4, be).value();
      if (img.is_64bit) {
        s.offset = read_u64(b, off + 24, be).value();
        s.size = read_u64(b, off + 32, be).value();
      } else {
        s.offset = read_u32(b, off + 16, be).value();
        s.size = read_u32(b, off + 20, be).value();
      }
      if (s.type != kShtNobits && s.size > 0 && s.offset + s.size > b.size())
        return detail::invalid(std::move(bytes), "section contents out of range");
    }

    const RawShdr& strtab = raw[shstrndx];
    auto section_name = [&](uint32_t name_off) -> std::string {
      if (strtab.type == kShtNobits || name_off >= strtab.size) return {};
      size_t start = size_t(strtab.offset) + name_off;
      std::string out;
      while (start < b.size() && b[start] != 0) out.push_back(char(b[start++]));
      return out;
    };

    for (const auto& s : raw) {
      Section sec;
      sec.name = section_name(s.name_off);
      sec.type = s.type;
      sec.offset = s.offset;
      sec.size = s.size;
      if (sec.type == kShtSymtab && sec.name == ".symtab") has_symtab = true;
      img.sections.push_back(std::move(sec));
    }
  }

  img.stripped = !has_symtab;
  img.arm_version_hint =
      img.cpu_arch == CpuArch::arm ? arm_hint_from_filename(filename) : std::nullopt;
  img.valid = true;
  img.bytes = std::move(bytes);
  return img;
}

}  // namespace trapline::elf
