#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "trapline/fixtures/elf_builder.hpp"
#include "trapline/fixtures/pcap_builder.hpp"
#include "trapline/sandbox/orchestrator.hpp"

using namespace trapline;
using namespace trapline::sandbox;
namespace fs = std::filesystem;

static elf::ElfImage make_elf(elf::CpuArch arch, const std::string& filename = "") {
  fixtures::MinElfSpec spec;
  spec.arch = arch;
  return elf::parse_elf(fixtures::build_min_elf(spec), filename);
}

static std::string ok_trace() {
  return "1 getpid() = 1\n"
         "1 open(\"/etc/hosts\", O_RDONLY) = 3\n"
         "1 read(3, \"x\", 1) = 1\n"
         "1 close(3) = 0\n"
         "1 write(1, \"y\", 1) = 1\n"
         "1 exit_group(0) = 0\n";
}

TEST_CASE("the vm fleet matches its fixed shape") {
  REQUIRE(group1_profiles().size() == 4);
  REQUIRE(group2_profiles().size() == 4);
  for (const auto& p : group1_profiles()) {
    CHECK(p.group == 1);
    CHECK(p.kernel == "4.16.7");
    CHECK(p.tracer == Tracer::systemtap_style);
    CHECK_FALSE(p.libc_dev);
  }
  for (const auto& p : group2_profiles()) {
    CHECK(p.group == 2);
    CHECK(p.kernel == "3.2");
    CHECK(p.tracer == Tracer::strace_style);
    CHECK(p.libc_dev);
  }
  CHECK(group1_profiles()[0].arm_version == 7);
  CHECK(group2_profiles()[0].arm_version == 5);
  for (auto arch : {elf::CpuArch::arm, elf::CpuArch::mips, elf::CpuArch::x86, elf::CpuArch::x86_64})
    CHECK(group2_counterpart(*detail::find_profile(group1_profiles(), arch)).cpu_arch == arch);
}

TEST_CASE("profile selection by architecture and arm version") {
  SECTION("arm v7 goes to group 1") {
    VmProfile p = select_profile(make_elf(elf::CpuArch::arm, "loligang.arm7"));
    CHECK(p.group == 1);
    CHECK(p.arm_version == 7);
  }
  SECTION("arm v5 and earlier go straight to group 2") {
    VmProfile p5 = select_profile(make_elf(elf::CpuArch::arm, "bot.arm5"));
    CHECK(p5.group == 2);
    CHECK(p5.arm_version == 5);
    CHECK(select_profile(make_elf(elf::CpuArch::arm, "bot.arm4")).group == 2);
  }
  SECTION("arm without a hint defaults to group 1") {
    CHECK(select_profile(make_elf(elf::CpuArch::arm, "Packets")).group == 1);
  }
  SECTION("the other architectures start on group 1") {
    for (auto arch : {elf::CpuArch::mips, elf::CpuArch::x86, elf::CpuArch::x86_64}) {
      VmProfile p = select_profile(make_elf(arch));
      CHECK(p.group == 1);
      CHECK(p.cpu_arch == arch);
    }
  }
  SECTION("unknown machine types have no profile") {
    fixtures::MinElfSpec spec;
    spec.arch = elf::CpuArch::arm;
    Bytes b = fixtures::build_min_elf(spec);
    b[18] = 0x77;  // e_machine nobody ships
    b[19] = 0x00;
    elf::ElfImage img = elf::parse_elf(b, "");
    try {
      select_profile(img);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unsupported);
    }
  }
  SECTION("selection is a pure function") {
    auto img = make_elf(elf::CpuArch::arm, "x.arm7");
    CHECK(select_profile(img) == select_profile(img));
  }
}

TEST_CASE("execution judgement") {
  Thresholds th;
  SECTION("an empty trace fails on event count") {
    Judgement j = judge_execution("", th);
    CHECK_FALSE(j.ok);
    REQUIRE_FALSE(j.signals.empty());
    CHECK(j.signals[0].find("parsed events") != std::string::npos);
  }
  SECTION("four events fail, five pass") {
    std::string four = "1 getpid() = 1\n1 close(1) = 0\n1 close(2) = 0\n1 close(3) = 0\n";
    CHECK_FALSE(judge_execution(four, th).ok);
    CHECK(judge_execution(four + "1 exit_group(0) = 0\n", th).ok);
  }
  SECTION("a long restart run fails") {
    std::string t;
    for (int i = 0; i < 50; i++) t += "1 restart_syscall(<... resuming interrupted call ...>) = -1\n";
    Judgement j = judge_execution(t, th);
    CHECK_FALSE(j.ok);
    REQUIRE_FALSE(j.signals.empty());
    CHECK(j.signals[0].find("restart_syscall") != std::string::npos);
  }
  SECTION("nine consecutive restarts are tolerated, ten are not") {
    auto with_run = [](int n) {
      std::string t = "1 getpid() = 1\n";
      for (int i = 0; i < n; i++) t += "1 restart_syscall() = -1\n";
      t += "1 close(1) = 0\n1 close(2) = 0\n1 close(3) = 0\n1 exit_group(0) = 0\n";
      return t;
    };
    CHECK(judge_execution(with_run(9), th).ok);
    CHECK_FALSE(judge_execution(with_run(10), th).ok);
  }
  SECTION("a broken run interrupted by one normal call passes") {
    std::string t = "1 getpid() = 1\n";
    for (int i = 0; i < 8; i++) t += "1 restart_syscall() = -1\n";
    t += "1 nanosleep({1,0}) = 0\n";
    for (int i = 0; i < 8; i++) t += "1 restart_syscall() = -1\n";
    CHECK(judge_execution(t, th).ok);
  }
  SECTION("thresholds are honoured") {
    Thresholds strict;
    strict.exec_min_events = 100;
    CHECK_FALSE(judge_execution(ok_trace(), strict).ok);
  }
}

TEST_CASE("fallback runs group 2 after a failed group 1 attempt") {
  VmProfile g1 = *detail::find_profile(group1_profiles(), elf::CpuArch::arm);
  SECTION("failure then success lands on group 2") {
    int calls = 0;
    FunctionExecutor ex([&](const ExecutionRequest& req) {
      calls++;
      RawExecution r;
      if (req.profile.group == 2) r.trace_text = ok_trace();
      return r;
    });
    ExecutionResult res = execute_with_fallback("s1", g1, 60, "", ex);
    CHECK(res.ok);
    CHECK(res.profile_used.group == 2);
    CHECK(calls == 2);
    REQUIRE(res.attempts.size() == 2);
    CHECK(res.attempts[0].profile.group == 1);
    CHECK_FALSE(res.attempts[0].ok);
    CHECK(res.attempts[1].ok);
  }
  SECTION("success on group 1 never retries") {
    int calls = 0;
    FunctionExecutor ex([&](const ExecutionRequest&) {
      calls++;
      return RawExecution{ok_trace(), {}};
    });
    ExecutionResult res = execute_with_fallback("s2", g1, 60, "", ex);
    CHECK(res.ok);
    CHECK(res.profile_used.group == 1);
    CHECK(calls == 1);
    CHECK(res.attempts.size() == 1);
  }
  SECTION("both failing is an overall failure after exactly two calls") {
    int calls = 0;
    FunctionExecutor ex([&](const ExecutionRequest&) {
      calls++;
      return RawExecution{};
    });
    ExecutionResult res = execute_with_fallback("s3", g1, 60, "", ex);
    CHECK_FALSE(res.ok);
    CHECK(calls == 2);
    CHECK(res.attempts.size() == 2);
    CHECK_FALSE(res.failure_signals.empty());
  }
  SECTION("a group 2 start has nowhere to fall back to") {
    int calls = 0;
    FunctionExecutor ex([&](const ExecutionRequest&) {
      calls++;
      return RawExecution{};
    });
    VmProfile g2 = *detail::find_profile(group2_profiles(), elf::CpuArch::arm);
    ExecutionResult res = execute_with_fallback("s4", g2, 60, "", ex);
    CHECK_FALSE(res.ok);
    CHECK(calls == 1);
  }
  SECTION("an executor error is a failed attempt, not a crash") {
    FunctionExecutor ex([&](const ExecutionRequest& req) -> RawExecution {
      if (req.profile.group == 1) fail(ErrorKind::io_error, "vm pool exhausted");
      return {ok_trace(), {}};
    });
    ExecutionResult res = execute_with_fallback("s5", g1, 60, "", ex);
    CHECK(res.ok);
    REQUIRE(res.attempts.size() == 2);
    REQUIRE_FALSE(res.attempts[0].signals.empty());
    CHECK(res.attempts[0].signals[0].find("executor:") == 0);
  }
}

TEST_CASE("the mock executor replays fixture recordings") {
  fs::path root = fs::temp_directory_path() / "trapline_sbx_fixture";
  fs::remove_all(root);
  fs::create_directories(root / "aabb" / "group2");
  fs::create_directories(root / "ccdd");
  std::ofstream(root / "aabb" / "group2" / "trace.txt") << ok_trace();
  std::ofstream(root / "ccdd" / "trace.txt") << ok_trace();
  Bytes cap = fixtures::CaptureBuilder{}.c2_session("9.9.9.9", 4700, 2).build();
  std::ofstream(root / "ccdd" / "capture.pcap", std::ios::binary)
      .write(reinterpret_cast<const char*>(cap.data()), static_cast<std::streamsize>(cap.size()));

  MockExecutor ex(root);
  VmProfile g1 = *detail::find_profile(group1_profiles(), elf::CpuArch::arm);

  SECTION("per-group recording only exists for group 2") {
    ExecutionResult res = execute_with_fallback("aabb", g1, 60, "", ex);
    CHECK(res.ok);
    CHECK(res.profile_used.group == 2);
  }
  SECTION("flat recording serves any profile") {
    RawExecution raw = ex.run({"ccdd", g1, 60, ""});
    CHECK(raw.trace_text == ok_trace());
    CHECK_FALSE(raw.capture_bytes.empty());
    CHECK(pcap::read_capture(raw.capture_bytes).packets.size() > 0);
  }
  SECTION("an unknown sample yields an empty run that fails judgement") {
    RawExecution raw = ex.run({"9999", g1, 60, ""});
    CHECK(raw.trace_text.empty());
    CHECK_FALSE(judge_execution(raw.trace_text).ok);
  }
  SECTION("a missing fixture root refuses to construct") {
    CHECK_THROWS_AS(MockExecutor(root / "nope"), Error);
  }
  fs::remove_all(root);
}

TEST_CASE("dropper detection ties written binaries to observed downloads") {
  auto behavior_writing = [](const std::string& path) {
    std::string t = "1 open(\"" + path + "\", O_WRONLY|O_CREAT, 0777) = 3\n" +
                    "1 write(3, \"\\177ELF\\1\\1\\1\\0\", 8) = 8\n1 close(3) = 0\n";
    return trace::analyze_behavior(trace::parse_trace(t).events);
  };
  auto network_with = [](const std::string& request) {
    return pcap::analyze_capture(
        fixtures::CaptureBuilder{}.http_request("192.236.146.234", 80, request).build());
  };

  SECTION("download saved under a different name still resolves") {
    auto net = network_with(
        "GET /lmaoWTF/loligang.arm7 HTTP/1.1\r\nHost: 192.236.146.234:80\r\n\r\n");
    auto url = detect_dropper(behavior_writing("/tmp/nya"), net);
    REQUIRE(url);
    CHECK(*url == "http://192.236.146.234:80/lmaoWTF/loligang.arm7");
  }
  SECTION("matching basename picks the right request among several") {
    auto net = network_with(
        "GET /bins/other.mips HTTP/1.1\r\nHost: h1\r\n\r\n"
        "GET /lmaoWTF/loligang.arm7 HTTP/1.1\r\nHost: h2\r\n\r\n");
    auto url = detect_dropper(behavior_writing("/tmp/loligang.arm7"), net);
    REQUIRE(url);
    CHECK(*url == "http://h2/lmaoWTF/loligang.arm7");
  }
  SECTION("no downloads means no dropper") {
    auto behavior = trace::analyze_behavior(trace::parse_trace(ok_trace()).events);
    auto net = network_with("GET /x HTTP/1.1\r\nHost: h\r\n\r\n");
    CHECK_FALSE(detect_dropper(behavior, net));
  }
  SECTION("a plain text download is not a dropper") {
    std::string t =
        "1 open(\"/tmp/conf.txt\", O_WRONLY|O_CREAT, 0644) = 3\n"
        "1 write(3, \"key=value\", 9) = 9\n1 close(3) = 0\n";
    auto behavior = trace::analyze_behavior(trace::parse_trace(t).events);
    auto net = network_with("GET /conf.txt HTTP/1.1\r\nHost: h\r\n\r\n");
    CHECK_FALSE(detect_dropper(behavior, net));
  }
  SECTION("elf writes with no network requests stay quiet") {
    pcap::NetworkReport empty;
    CHECK_FALSE(detect_dropper(behavior_writing("/tmp/nya"), empty));
  }
}

TEST_CASE("behavior reports list files written with elf magic") {
  std::string t =
      "7 openat(AT_FDCWD, \"/tmp/nya\", O_WRONLY|O_CREAT, 0777) = 5\n"
      "7 write(5, \"\\177ELF\\2\\1\\1\\0\", 8) = 8\n"
      "7 close(5) = 0\n"
      "7 open(\"/tmp/log\", O_WRONLY|O_CREAT) = 5\n"
      "7 write(5, \"hello\", 5) = 5\n";
  auto rep = trace::analyze_behavior(trace::parse_trace(t).events);
  CHECK(rep.elf_files_written == std::vector<std::string>{"/tmp/nya"});
  auto back = trace::behavior_report_from_json(to_json(rep));
  CHECK(back.elf_files_written == rep.elf_files_written);
}
