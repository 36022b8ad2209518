#include <catch2/catch_amalgamated.hpp>

#include "trapline/elf/elf.hpp"
#include "trapline/fixtures/elf_builder.hpp"

using namespace trapline;
using fixtures::MinElfSpec;
using fixtures::PayloadEntropy;

TEST_CASE("machine field maps to cpu architecture") {
  struct Row {
    elf::CpuArch arch;
    bool is64;
  };
  for (auto [arch, is64] : {Row{elf::CpuArch::arm, false},
                            Row{elf::CpuArch::mips, false},
                            Row{elf::CpuArch::x86, false},
                            Row{elf::CpuArch::x86_64, true}}) {
    MinElfSpec spec;
    spec.arch = arch;
    auto img = elf::parse_elf(fixtures::build_min_elf(spec));
    REQUIRE(img.valid);
    CHECK(img.cpu_arch == arch);
    CHECK(img.is_64bit == is64);
    CHECK(img.endianness ==
          (arch == elf::CpuArch::mips ? elf::Endianness::big : elf::Endianness::little));
  }
}

TEST_CASE("unknown machine value parses as other") {
  auto bytes = fixtures::build_min_elf({});
  bytes[18] = 0x2A;  // e_machine
  bytes[19] = 0x00;
  auto img = elf::parse_elf(std::move(bytes));
  REQUIRE(img.valid);
  CHECK(img.cpu_arch == elf::CpuArch::other);
}

TEST_CASE("arm version hint comes from the filename suffix") {
  auto bytes = fixtures::build_min_elf({});
  CHECK(elf::parse_elf(bytes, "b3astmode.arm7").arm_version_hint == 7);
  CHECK(elf::parse_elf(bytes, "x.ARM5").arm_version_hint == 5);
  CHECK(elf::parse_elf(bytes, "loligang.arm6").arm_version_hint == 6);
  CHECK_FALSE(elf::parse_elf(bytes, "x.arm").arm_version_hint.has_value());
  CHECK_FALSE(elf::parse_elf(bytes, "x.mips").arm_version_hint.has_value());

  SECTION("hint only applies to arm binaries") {
    MinElfSpec spec;
    spec.arch = elf::CpuArch::mips;
    auto img = elf::parse_elf(fixtures::build_min_elf(spec), "confusing.arm7");
    CHECK_FALSE(img.arm_version_hint.has_value());
  }
}

TEST_CASE("linking and stripping are read from the image") {
  MinElfSpec spec;
  SECTION("static stripped") {
    spec.linking = elf::Linking::static_linked;
    spec.stripped = true;
    auto img = elf::parse_elf(fixtures::build_min_elf(spec));
    REQUIRE(img.valid);
    CHECK(img.linking == elf::Linking::static_linked);
    CHECK(img.stripped);
  }
  SECTION("dynamic with symbols") {
    spec.linking = elf::Linking::dynamic_linked;
    spec.stripped = false;
    auto img = elf::parse_elf(fixtures::build_min_elf(spec));
    REQUIRE(img.valid);
    CHECK(img.linking == elf::Linking::dynamic_linked);
    CHECK_FALSE(img.stripped);
  }
}

TEST_CASE("corrupt inputs never validate") {
  SECTION("wrong magic") {
    Bytes mz = {'M', 'Z', 0x90, 0x00};
    mz.resize(128, 0);
    auto img = elf::parse_elf(std::move(mz));
    CHECK_FALSE(img.valid);
    CHECK_FALSE(img.error.empty());
  }
  SECTION("truncated header") {
    auto bytes = fixtures::build_min_elf({});
    bytes.resize(40);
    CHECK_FALSE(elf::parse_elf(std::move(bytes)).valid);
  }
  SECTION("empty input") { CHECK_FALSE(elf::parse_elf(Bytes{}).valid); }
  SECTION("section header table past the end") {
    auto bytes = fixtures::build_min_elf({});
    // e_shoff (32-bit LE at offset 32)
    bytes[32] = 0xFF;
    bytes[33] = 0xFF;
    bytes[34] = 0xFF;
    bytes[35] = 0x00;
    CHECK_FALSE(elf::parse_elf(std::move(bytes)).valid);
  }
  SECTION("flipping each header byte never crashes the parser") {
    auto base = fixtures::build_min_elf({});
    for (size_t i = 0; i < 52; i++) {
      auto mutated = base;
      mutated[i] ^= 0xFF;
      auto img = elf::parse_elf(std::move(mutated));
      if (!img.valid) CHECK_FALSE(img.error.empty());
    }
  }
}

TEST_CASE("builder output stays consistent under every knob") {
  for (auto arch : {elf::CpuArch::arm, elf::CpuArch::mips, elf::CpuArch::x86,
                    elf::CpuArch::x86_64}) {
    for (auto linking : {elf::Linking::static_linked, elf::Linking::dynamic_linked}) {
      for (bool stripped : {false, true}) {
        MinElfSpec spec;
        spec.arch = arch;
        spec.linking = linking;
        spec.stripped = stripped;
        auto img = elf::parse_elf(fixtures::build_min_elf(spec));
        INFO(elf::to_string(arch) << " " << elf::to_string(linking) << " stripped=" << stripped);
        REQUIRE(img.valid);
        CHECK(img.cpu_arch == arch);
        CHECK(img.linking == linking);
        CHECK(img.stripped == stripped);
        CHECK_FALSE(img.sections.empty());
      }
    }
  }
}
