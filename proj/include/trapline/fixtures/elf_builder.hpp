#pragma once

#include <string>

#include "trapline/core/bytes.hpp"
#include "trapline/elf/elf.hpp"

namespace trapline::fixtures {

enum class PayloadEntropy {
  constant,  // one repeated byte, entropy 0
  text,      // ascii-ish filler, low entropy
  uniform,   // every byte value equally often, entropy exactly 8 when size % 256 == 0
  random,    // seeded PRNG stream, entropy close to 8
};

struct MinElfSpec {
  elf::CpuArch arch = elf::CpuArch::arm;
  elf::Linking linking = elf::Linking::static_linked;
  bool stripped = true;
  PayloadEntropy payload_entropy = PayloadEntropy::text;
  size_t payload_size = 1024;
  uint64_t seed = 1;
  // NUL-separated into the payload ahead of the filler, so string extraction
  // sees each one intact
  std::vector<std::string> embedded_strings;
};

namespace detail {

inline Bytes make_payload(PayloadEntropy kind, size_t size, uint64_t seed) {
  Bytes out;
  out.reserve(size);
  switch (kind) {
    case PayloadEntropy::constant:
      out.assign(size, 0x90);
      break;
    case PayloadEntropy::text: {
      // deliberately free of indicator-looking tokens
      static const char* filler = "update worker keeps local queue state in sync between runs ";
      size_t n = std::string(filler).size();
      for (size_t i = 0; i < size; i++) out.push_back(uint8_t(filler[i % n]));
      break;
    }
    case PayloadEntropy::uniform:
      for (size_t i = 0; i < size; i++) out.push_back(uint8_t(i & 0xff));
      break;
    case PayloadEntropy::random: {
      DeterministicRng rng(seed);
      out = rng.bytes(size);
      break;
    }
  }
  return out;
}

inline uint16_t machine_of(elf::CpuArch arch) {
  switch (arch) {
    case elf::CpuArch::arm: return elf::kMachineArm;
    case elf::CpuArch::mips: return elf::kMachineMips;
    case elf::CpuArch::x86: return elf::kMachineX86;
    case elf::CpuArch::x86_64: return elf::kMachineX86_64;
    default: return 0x1234;
  }
}

}  // namespace detail

// Builds a minimal but fully consistent ELF image: header, program headers,
// a .text section carrying the payload, .symtab/.strtab unless stripped, and
// a section-name table. MIPS images are big-endian, the rest little-endian;
// x86_64 is 64-bit, the rest 32-bit. Deterministic for a fixed spec.
inline Bytes build_min_elf(const MinElfSpec& spec) {
  bool be = spec.arch == elf::CpuArch::mips;
  bool is64 = spec.arch == elf::CpuArch::x86_64;
  bool dynamic = spec.linking == elf::Linking::dynamic_linked;

  const size_t ehsize = is64 ? 64 : 52;
  const size_t phentsize = is64 ? 56 : 32;
  const size_t shentsize = is64 ? 64 : 40;
  const size_t phnum = dynamic ? 3 : 1;  // LOAD [+ INTERP + DYNAMIC]

  Bytes payload;
  for (const auto& s : spec.embedded_strings) {
    payload.insert(payload.end(), s.begin(), s.end());
    payload.push_back(0);
  }
  {
    Bytes filler = detail::make_payload(spec.payload_entropy, spec.payload_size, spec.seed);
    payload.insert(payload.end(), filler.begin(), filler.end());
  }
  std::string interp = "/lib/ld-linux.so.3";
  Bytes dyn;  // single DT_NULL terminator entry
  if (dynamic) {
    if (is64) {
      put_u64(dyn, 0, be);
      put_u64(dyn, 0, be);
    } else {
      put_u32(dyn, 0, be);
      put_u32(dyn, 0, be);
    }
  }

  // Symbol table: null symbol + one named symbol ("main").
  std::string strtab = std::string("\0main\0", 6);
  Bytes symtab;
  if (!spec.stripped) {
    auto emit_sym = [&](uint32_t name_off) {
      if (is64) {
        put_u32(symtab, name_off, be);   // st_name
        symtab.push_back(0);             // st_info
        symtab.push_back(0);             // st_other
        put_u16(symtab, 1, be);          // st_shndx -> .text
        put_u64(symtab, 0, be);          // st_value
        put_u64(symtab, 0, be);          // st_size
      } else {
        put_u32(symtab, name_off, be);
        put_u32(symtab, 0, be);          // st_value
        put_u32(symtab, 0, be);          // st_size
        symtab.push_back(0);
        symtab.push_back(0);
        put_u16(symtab, 1, be);
      }
    };
    emit_sym(0);
    emit_sym(1);
  }

  // Section name string table.
  struct NamedSection {
    std::string name;
    uint32_t type;
    const Bytes* body;
    Bytes owned;
  };
  Bytes interp_bytes = to_bytes(interp);
  interp_bytes.push_back(0);
  Bytes strtab_bytes = to_bytes(strtab);

  std::vector<NamedSection> sections;
  sections.push_back({".text", 1 /*PROGBITS*/, &payload, {}});
  if (dynamic) {
    sections.push_back({".interp", 1, &interp_bytes, {}});
    sections.push_back({".dynamic", 6 /*DYNAMIC*/, &dyn, {}});
  }
  if (!spec.stripped) {
    sections.push_back({".symtab", elf::kShtSymtab, &symtab, {}});
    sections.push_back({".strtab", 3 /*STRTAB*/, &strtab_bytes, {}});
  }

  std::string shstrtab(1, '\0');
  std::vector<uint32_t> name_offsets;
  for (const auto& s : sections) {
    name_offsets.push_back(uint32_t(shstrtab.size()));
    shstrtab += s.name;
    shstrtab.push_back('\0');
  }
  uint32_t shstrtab_name_off = uint32_t(shstrtab.size());
  shstrtab += ".shstrtab";
  shstrtab.push_back('\0');
  Bytes shstrtab_bytes = to_bytes(shstrtab);
  sections.push_back({".shstrtab", 3, &shstrtab_bytes, {}});
  name_offsets.push_back(shstrtab_name_off);

  // File layout: ehdr | phdrs | section bodies... | shdrs
  size_t cursor = ehsize + phnum * phentsize;
  std::vector<size_t> body_offsets;
  for (const auto& s : sections) {
    body_offsets.push_back(cursor);
    cursor += s.body->size();
  }
  size_t shoff = cursor;
  size_t shnum = sections.size() + 1;  // + NULL entry

  Bytes out;
  out.reserve(shoff + shnum * shentsize);

  // ELF header
  out.insert(out.end(), {0x7f, 'E', 'L', 'F'});
  out.push_back(is64 ? 2 : 1);
  out.push_back(be ? 2 : 1);
  out.push_back(1);  // EI_VERSION
  while (out.size() < 16) out.push_back(0);
  put_u16(out, 2, be);                               // e_type = EXEC
  put_u16(out, detail::machine_of(spec.arch), be);   // e_machine
  put_u32(out, 1, be);                               // e_version
  if (is64) {
    put_u64(out, 0x400000, be);                      // e_entry
    put_u64(out, ehsize, be);                        // e_phoff
    put_u64(out, shoff, be);                         // e_shoff
  } else {
    put_u32(out, 0x8000, be);
    put_u32(out, uint32_t(ehsize), be);
    put_u32(out, uint32_t(shoff), be);
  }
  put_u32(out, 0, be);                               // e_flags
  put_u16(out, uint16_t(ehsize), be);
  put_u16(out, uint16_t(phentsize), be);
  put_u16(out, uint16_t(phnum), be);
  put_u16(out, uint16_t(shentsize), be);
  put_u16(out, uint16_t(shnum), be);
  put_u16(out, uint16_t(shnum - 1), be);             // e_shstrndx = last section

  // Program headers
  auto emit_phdr = [&](uint32_t type, size_t offset, size_t filesz) {
    if (is64) {
      put_u32(out, type, be);
      put_u32(out, 5, be);          // p_flags r+x
      put_u64(out, offset, be);
      put_u64(out, 0x400000 + offset, be);  // p_vaddr
      put_u64(out, 0x400000 + offset, be);  // p_paddr
      put_u64(out, filesz, be);
      put_u64(out, filesz, be);     // p_memsz
      put_u64(out, 0x1000, be);     // p_align
    } else {
      put_u32(out, type, be);
      put_u32(out, uint32_t(offset), be);
      put_u32(out, uint32_t(0x8000 + offset), be);
      put_u32(out, uint32_t(0x8000 + offset), be);
      put_u32(out, uint32_t(filesz), be);
      put_u32(out, uint32_t(filesz), be);
      put_u32(out, 5, be);
      put_u32(out, 0x1000, be);
    }
  };
  emit_phdr(1 /*PT_LOAD*/, 0, body_offsets[0] + payload.size());
  if (dynamic) {
    emit_phdr(elf::kPtInterp, body_offsets[1], interp_bytes.size());
    emit_phdr(elf::kPtDynamic, body_offsets[2], dyn.size());
  }

  for (const auto& s : sections) out.insert(out.end(), s.body->begin(), s.body->end());

  // Section headers: NULL first.
  auto emit_shdr = [&](uint32_t name, uint32_t type, size_t offset, size_t size) {
    if (is64) {
      put_u32(out, name, be);
      put_u32(out, type, be);
      put_u64(out, 0, be);       // sh_flags
      put_u64(out, 0, be);       // sh_addr
      put_u64(out, offset, be);
      put_u64(out, size, be);
      put_u32(out, 0, be);       // sh_link
      put_u32(out, 0, be);       // sh_info
      put_u64(out, 1, be);       // sh_addralign
      put_u64(out, 0, be);       // sh_entsize
    } else {
      put_u32(out, name, be);
      put_u32(out, type, be);
      put_u32(out, 0, be);
      put_u32(out, 0, be);
      put_u32(out, uint32_t(offset), be);
      put_u32(out, uint32_t(size), be);
      put_u32(out, 0, be);
      put_u32(out, 0, be);
      put_u32(out, 1, be);
      put_u32(out, 0, be);
    }
  };
  emit_shdr(0, 0, 0, 0);
  for (size_t i = 0; i < sections.size(); i++)
    emit_shdr(name_offsets[i], sections[i].type, body_offsets[i], sections[i].body->size());

  return out;
}

// Packed-file layout produced by the stock UPX packer: loader info record
// ("UPX!" magic) right after the program headers, program info with matching
// file/block sizes, a compressed blob, and a trailing pack header that repeats
// the magic. No section table. High entropy by construction.
inline Bytes build_upx_packed_like(size_t blob_size = 8192, uint64_t seed = 7,
                                   elf::CpuArch arch = elf::CpuArch::arm) {
  bool be = arch == elf::CpuArch::mips;
  const size_t ehsize = 52, phentsize = 32, phnum = 2;

  Bytes out;
  out.insert(out.end(), {0x7f, 'E', 'L', 'F'});
  out.push_back(1);
  out.push_back(be ? 2 : 1);
  out.push_back(1);
  while (out.size() < 16) out.push_back(0);
  put_u16(out, 2, be);
  put_u16(out, detail::machine_of(arch), be);
  put_u32(out, 1, be);
  put_u32(out, 0x8000, be);                 // e_entry
  put_u32(out, uint32_t(ehsize), be);       // e_phoff
  put_u32(out, 0, be);                      // e_shoff: packed files drop the section table
  put_u32(out, 0, be);
  put_u16(out, uint16_t(ehsize), be);
  put_u16(out, uint16_t(phentsize), be);
  put_u16(out, uint16_t(phnum), be);
  put_u16(out, 40, be);                     // e_shentsize (unused)
  put_u16(out, 0, be);                      // e_shnum
  put_u16(out, 0, be);                      // e_shstrndx

  size_t total = ehsize + phnum * phentsize + 24 + blob_size + 36;
  auto emit_phdr = [&](uint32_t type, size_t offset, size_t filesz) {
    put_u32(out, type, be);
    put_u32(out, uint32_t(offset), be);
    put_u32(out, uint32_t(0x8000 + offset), be);
    put_u32(out, uint32_t(0x8000 + offset), be);
    put_u32(out, uint32_t(filesz), be);
    put_u32(out, uint32_t(filesz), be);
    put_u32(out, 5, be);
    put_u32(out, 0x1000, be);
  };
  emit_phdr(1, 0, total);
  emit_phdr(1, 0, 0x2000);

  // l_info: checksum, magic, loader size, version, format
  DeterministicRng rng(seed);
  put_u32(out, uint32_t(rng.next()), be);
  out.insert(out.end(), {'U', 'P', 'X', '!'});
  put_u16(out, 0x1000, be);  // l_lsize
  out.push_back(13);         // l_version
  out.push_back(22);         // l_format (linux/elf)

  // p_info: progid, filesize, blocksize (equal on stock output)
  put_u32(out, 0, be);
  put_u32(out, uint32_t(blob_size), be);
  put_u32(out, uint32_t(blob_size), be);

  Bytes blob = rng.bytes(blob_size);
  out.insert(out.end(), blob.begin(), blob.end());

  // Trailing pack header (magic + version/method/level + checksums).
  out.insert(out.end(), {'U', 'P', 'X', '!'});
  Bytes tail = rng.bytes(28);
  out.insert(out.end(), tail.begin(), tail.end());
  put_u32(out, uint32_t(out.size() + 4), be);
  return out;
}

// Overwrites every "UPX!" magic occurrence, leaving sizes and entropy intact.
inline Bytes corrupt_upx_magic(Bytes packed) {
  for (size_t i = 0; i + 4 <= packed.size(); i++) {
    if (packed[i] == 'U' && packed[i + 1] == 'P' && packed[i + 2] == 'X' && packed[i + 3] == '!') {
      packed[i] = 'Z';
      packed[i + 1] = 'Q';
    }
  }
  return packed;
}

}  // namespace trapline::fixtures
