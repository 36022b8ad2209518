#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapline/elf/elf.hpp"

namespace trapline::sandbox {

enum class Tracer { systemtap_style, strace_style };

inline std::string to_string(Tracer t) {
  return t == Tracer::systemtap_style ? "systemtap_style" : "strace_style";
}

struct VmProfile {
  int group = 1;
  elf::CpuArch cpu_arch = elf::CpuArch::x86;
  std::optional<int> arm_version;
  std::string kernel;
  Tracer tracer = Tracer::systemtap_style;
  bool libc_dev = false;

  bool operator==(const VmProfile&) const = default;

  std::string name() const {
    std::string arch = elf::to_string(cpu_arch);
    if (arm_version) arch += "v" + std::to_string(*arm_version) + "l";
    return "group" + std::to_string(group) + "-" + arch;
  }
};

// The fixed VM fleet. The first group runs a recent kernel with in-kernel
// tracing; the second runs an old kernel with a userland tracer and
// development libc, for binaries built against ancient toolchains.
inline const std::vector<VmProfile>& group1_profiles() {
  static const std::vector<VmProfile> v = {
      {1, elf::CpuArch::arm, 7, "4.16.7", Tracer::systemtap_style, false},
      {1, elf::CpuArch::mips, std::nullopt, "4.16.7", Tracer::systemtap_style, false},
      {1, elf::CpuArch::x86, std::nullopt, "4.16.7", Tracer::systemtap_style, false},
      {1, elf::CpuArch::x86_64, std::nullopt, "4.16.7", Tracer::systemtap_style, false},
  };
  return v;
}

inline const std::vector<VmProfile>& group2_profiles() {
  static const std::vector<VmProfile> v = {
      {2, elf::CpuArch::arm, 5, "3.2", Tracer::strace_style, true},
      {2, elf::CpuArch::mips, std::nullopt, "3.2", Tracer::strace_style, true},
      {2, elf::CpuArch::x86, std::nullopt, "3.2", Tracer::strace_style, true},
      {2, elf::CpuArch::x86_64, std::nullopt, "3.2", Tracer::strace_style, true},
  };
  return v;
}

namespace detail {

inline const VmProfile* find_profile(const std::vector<VmProfile>& set, elf::CpuArch arch) {
  for (const auto& p : set)
    if (p.cpu_arch == arch) return &p;
  return nullptr;
}

}  // namespace detail

// The group-2 machine for the same architecture.
inline VmProfile group2_counterpart(const VmProfile& p) {
  return *detail::find_profile(group2_profiles(), p.cpu_arch);
}

// Picks the machine that best matches the binary. ARM builds flagged for
// version 5 or earlier skip group 1 entirely; everything else starts on the
// group-1 machine for its architecture.
inline VmProfile select_profile(const elf::ElfImage& img) {
  if (img.cpu_arch == elf::CpuArch::other)
    fail(ErrorKind::unsupported, "no VM profile for this architecture");
  if (img.cpu_arch == elf::CpuArch::arm && img.arm_version_hint && *img.arm_version_hint <= 5)
    return *detail::find_profile(group2_profiles(), elf::CpuArch::arm);
  return *detail::find_profile(group1_profiles(), img.cpu_arch);
}

inline nlohmann::json to_json(const VmProfile& p) {
  nlohmann::json j{{"group", p.group},
                   {"cpu_arch", elf::to_string(p.cpu_arch)},
                   {"kernel", p.kernel},
                   {"tracer", to_string(p.tracer)},
                   {"libc_dev", p.libc_dev},
                   {"name", p.name()}};
  if (p.arm_version) j["arm_version"] = *p.arm_version;
  return j;
}

}  // namespace trapline::sandbox
