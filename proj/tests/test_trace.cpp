#include <catch2/catch_amalgamated.hpp>

#include "trapline/trace/behavior.hpp"
#include "trapline/trace/events.hpp"
#include "trapline/trace/process_tree.hpp"

using namespace trapline;
using namespace trapline::trace;

TEST_CASE("trace lines parse into events") {
  auto t = parse_trace("101 unlink(\"/tmp/x\") = 0\n");
  REQUIRE(t.events.size() == 1);
  CHECK(t.events[0].pid == 101);
  CHECK(t.events[0].name == "unlink");
  REQUIRE(t.events[0].args.size() == 1);
  CHECK(t.events[0].args[0] == "\"/tmp/x\"");
  CHECK(t.events[0].retval == "0");
  CHECK(t.malformed_lines == 0);
}

TEST_CASE("argument splitting respects quotes and nesting") {
  auto t = parse_trace(
      "7 execve(\"/bin/rm\", [\"rm\", \"-rf\", \"Jaws.sh\"], 0x7ffd) = 0\n"
      "7 write(1, \"a,b,(c\", 6) = 6\n"
      "7 prctl(PR_SET_NAME, \"sshd\") = 0\n");
  REQUIRE(t.events.size() == 3);
  REQUIRE(t.events[0].args.size() == 3);
  CHECK(t.events[0].args[1] == "[\"rm\", \"-rf\", \"Jaws.sh\"]");
  REQUIRE(t.events[1].args.size() == 3);
  CHECK(t.events[1].args[1] == "\"a,b,(c\"");
  CHECK(t.events[2].args[0] == "PR_SET_NAME");

  SECTION("negative and annotated retvals keep their text") {
    auto u = parse_trace("9 open(\"/nope\") = -1 ENOENT (No such file or directory)\n");
    CHECK(u.events[0].retval == "-1 ENOENT (No such file or directory)");
    CHECK(retval_int(u.events[0]) == -1);
  }
}

TEST_CASE("seq is strictly increasing") {
  auto t = parse_trace(
      "1 close(3) = 0\n1 close(4) = 0\n1 close(5) = 0\n");
  for (size_t i = 0; i < t.events.size(); i++) CHECK(t.events[i].seq == i);
}

TEST_CASE("malformed lines are counted and skipped") {
  auto t = parse_trace(
      "100 getpid() = 100\n"
      "this is garbage\n"
      "101 no_parens = 1\n"
      "-3 open(\"x\") = 0\n"
      "102 close(3) = 0\n");
  CHECK(t.events.size() == 2);
  CHECK(t.malformed_lines == 3);
}

TEST_CASE("a trace with nothing parseable is an error") {
  CHECK_THROWS_AS(parse_trace("junk\nmore junk\n"), Error);
  CHECK_THROWS_AS(parse_trace(""), Error);
}

TEST_CASE("unfinished and resumed fragments merge by pid and name") {
  auto t = parse_trace(
      "10 open(\"/etc/passwd\" <unfinished ...>\n"
      "11 getpid() = 11\n"
      "10 <... open resumed> , O_RDONLY) = 3\n");
  REQUIRE(t.events.size() == 2);
  CHECK(t.events[0].name == "getpid");
  CHECK(t.events[1].name == "open");
  CHECK(t.events[1].pid == 10);
  REQUIRE(t.events[1].args.size() == 2);
  CHECK(t.events[1].args[0] == "\"/etc/passwd\"");
  CHECK(t.events[1].args[1] == "O_RDONLY");
  CHECK(t.events[1].retval == "3");
  CHECK(t.malformed_lines == 0);

  SECTION("a resume with no opening half is skipped") {
    auto u = parse_trace(
        "5 getpid() = 5\n"
        "6 <... read resumed> ) = 10\n");
    CHECK(u.events.size() == 1);
    CHECK(u.malformed_lines == 1);
  }
  SECTION("an unfinished call that never resumes is skipped") {
    auto u = parse_trace(
        "5 getpid() = 5\n"
        "5 read(3 <unfinished ...>\n");
    CHECK(u.events.size() == 1);
    CHECK(u.malformed_lines == 1);
  }
}

TEST_CASE("process tree follows spawn return values") {
  auto t = parse_trace(
      "100 fork() = 101\n"
      "101 clone(CLONE_VM) = 102\n"
      "102 getpid() = 102\n"
      "100 wait4(101) = 101\n");
  auto tree = build_process_tree(t.events);
  REQUIRE(tree.nodes.size() == 3);
  CHECK_FALSE(tree.nodes.at(100).parent_pid.has_value());
  CHECK(tree.nodes.at(101).parent_pid == 100);
  CHECK(tree.nodes.at(102).parent_pid == 101);
  CHECK(tree.depth() == 3);
  CHECK(tree.roots() == std::vector<int>{100});
  CHECK(tree.warnings.empty());

  SECTION("single pid means a single node") {
    auto u = parse_trace("55 getpid() = 55\n55 close(1) = 0\n");
    auto single = build_process_tree(u.events);
    CHECK(single.nodes.size() == 1);
    CHECK(single.depth() == 1);
  }

  SECTION("failed spawns create no edge") {
    auto u = parse_trace("55 fork() = -1 EAGAIN\n");
    auto none = build_process_tree(u.events);
    CHECK(none.nodes.size() == 1);
  }
}

TEST_CASE("conflicting spawn edges warn and keep the latest") {
  auto t = parse_trace(
      "100 fork() = 102\n"
      "101 fork() = 102\n"
      "102 getpid() = 102\n");
  auto tree = build_process_tree(t.events);
  CHECK(tree.nodes.at(102).parent_pid == 101);
  REQUIRE_FALSE(tree.warnings.empty());
}

TEST_CASE("renamed processes carry their assigned name") {
  auto t = parse_trace("200 prctl(PR_SET_NAME, \"sshd\") = 0\n");
  auto tree = build_process_tree(t.events);
  CHECK(tree.nodes.at(200).assigned_name == "sshd");
}

TEST_CASE("file lifecycle comes from open flags and removal calls") {
  auto t = parse_trace(
      "1 openat(AT_FDCWD, \"/tmp/bot\", O_WRONLY|O_CREAT, 0777) = 3\n"
      "1 open(\"/etc/hosts\", O_RDONLY) = 4\n"
      "1 unlink(\"/tmp/bot\") = 0\n"
      "1 execve(\"/bin/rm\", [\"rm\", \"-rf\", \"Jaws.sh\"], 0) = 0\n");
  auto rep = analyze_behavior(t.events);
  CHECK(rep.files_created == std::vector<std::string>{"/tmp/bot"});
  REQUIRE(rep.files_removed.size() == 2);
  CHECK(rep.files_removed[0] == "/tmp/bot");
  CHECK(rep.files_removed[1] == "Jaws.sh");
}

TEST_CASE("each planted event yields one finding in its category") {
  auto t = parse_trace(
      "1 openat(AT_FDCWD, \"/etc/init.d/bot\", O_WRONLY|O_CREAT) = 3\n"
      "1 unlink(\"/tmp/Jaws.sh\") = 0\n"
      "1 ptrace(PTRACE_TRACEME, 0, 0, 0) = 0\n"
      "1 open(\"/proc/cpuinfo\", O_RDONLY) = 4\n");
  auto rep = analyze_behavior(t.events);

  REQUIRE(rep.persistence.size() == 1);
  CHECK(rep.persistence[0].technique == "persistence_path");
  CHECK(rep.persistence[0].evidence == "init.d");
  CHECK(rep.persistence[0].seq == 0);

  REQUIRE(rep.anti_forensics.size() == 1);
  CHECK(rep.anti_forensics[0].technique == "file_removal");
  CHECK(rep.anti_forensics[0].seq == 1);

  REQUIRE(rep.anti_debug.size() == 1);
  CHECK(rep.anti_debug[0].technique == "ptrace_traceme");
  CHECK(rep.anti_debug[0].seq == 2);

  REQUIRE(rep.anti_sandbox.size() == 1);
  CHECK(rep.anti_sandbox[0].technique == "vm_probe");
  CHECK(rep.anti_sandbox[0].evidence == "/proc/cpuinfo");
  CHECK(rep.anti_sandbox[0].seq == 3);
}

TEST_CASE("detector catalogue") {
  SECTION("cron exec is persistence") {
    auto rep = analyze_behavior(
        parse_trace("1 execve(\"/usr/bin/crontab\", [\"crontab\", \"bot.cron\"], 0) = 0\n").events);
    REQUIRE_FALSE(rep.persistence.empty());
    CHECK(rep.persistence[0].evidence == "crontab");
  }
  SECTION("module loading flips the flag and reports") {
    auto rep = analyze_behavior(parse_trace("1 init_module(0x7f, 9000, \"\") = 0\n").events);
    CHECK(rep.kernel_module_loaded);
    REQUIRE(rep.persistence.size() == 1);
    CHECK(rep.persistence[0].technique == "kernel_module");
  }
  SECTION("renaming is anti-forensics and lands in the tree") {
    auto rep = analyze_behavior(parse_trace("1 prctl(PR_SET_NAME, \"sshd\") = 0\n").events);
    REQUIRE(rep.anti_forensics.size() == 1);
    CHECK(rep.anti_forensics[0].technique == "process_renaming");
    CHECK(rep.anti_forensics[0].evidence == "sshd");
    CHECK(rep.process_tree.nodes.at(1).assigned_name == "sshd");
  }
  SECTION("firewall change via iptables exec") {
    auto rep = analyze_behavior(parse_trace(
        "1 execve(\"/sbin/iptables\", [\"iptables\", \"-A\", \"INPUT\", \"-p\", \"tcp\", "
        "\"--dport\", \"23\", \"-j\", \"DROP\"], 0) = 0\n").events);
    REQUIRE(rep.anti_forensics.size() == 1);
    CHECK(rep.anti_forensics[0].technique == "firewall_change");
  }
  SECTION("poke flags are process injection") {
    auto rep = analyze_behavior(
        parse_trace("1 ptrace(PTRACE_POKETEXT, 44, 0x1000, 0xdead) = 0\n").events);
    REQUIRE(rep.anti_forensics.size() == 1);
    CHECK(rep.anti_forensics[0].technique == "process_injection");
    CHECK(rep.anti_forensics[0].evidence == "PTRACE_POKETEXT");
  }
  SECTION("attach hits both injection and debugging") {
    auto rep = analyze_behavior(parse_trace("1 ptrace(PTRACE_ATTACH, 44) = 0\n").events);
    REQUIRE(rep.anti_forensics.size() == 1);
    CHECK(rep.anti_forensics[0].technique == "process_injection");
    REQUIRE(rep.anti_debug.size() == 1);
    CHECK(rep.anti_debug[0].technique == "ptrace_attach");
  }
  SECTION("tracerpid file reads are flagged") {
    auto rep = analyze_behavior(
        parse_trace("1 open(\"/proc/self/status\", O_RDONLY) = 3\n").events);
    REQUIRE(rep.anti_debug.size() == 1);
    CHECK(rep.anti_debug[0].technique == "tracerpid_check");
  }
  SECTION("hypervisor strings in buffers") {
    auto rep = analyze_behavior(
        parse_trace("1 read(3, \"QEMU Virtual CPU version 2.5\", 64) = 28\n").events);
    REQUIRE(rep.anti_sandbox.size() == 1);
    CHECK(rep.anti_sandbox[0].technique == "hypervisor_keyword");
    CHECK(rep.anti_sandbox[0].evidence == "QEMU");
  }
  SECTION("ps execution is process enumeration") {
    auto rep = analyze_behavior(
        parse_trace("1 execve(\"/bin/ps\", [\"ps\", \"aux\"], 0) = 0\n").events);
    REQUIRE(rep.anti_sandbox.size() == 1);
    CHECK(rep.anti_sandbox[0].technique == "process_enumeration");
  }
  SECTION("proc directory scan is process enumeration") {
    auto rep = analyze_behavior(
        parse_trace("1 open(\"/proc\", O_RDONLY|O_DIRECTORY) = 3\n").events);
    REQUIRE(rep.anti_sandbox.size() == 1);
    CHECK(rep.anti_sandbox[0].technique == "process_enumeration");
  }
  SECTION("mounting over proc") {
    auto rep = analyze_behavior(
        parse_trace("1 mount(\"proc\", \"/proc\", \"proc\", 0, NULL) = 0\n").events);
    REQUIRE(rep.anti_sandbox.size() == 1);
    CHECK(rep.anti_sandbox[0].technique == "proc_mount");
  }
  SECTION("startup config reads") {
    auto rep = analyze_behavior(parse_trace("1 open(\"/etc/rcS\", O_RDONLY) = 3\n").events);
    REQUIRE(rep.anti_sandbox.size() == 1);
    CHECK(rep.anti_sandbox[0].technique == "startup_service_read");
  }
  SECTION("cron listing") {
    auto rep = analyze_behavior(
        parse_trace("1 execve(\"/usr/bin/crontab\", [\"crontab\", \"-l\"], 0) = 0\n").events);
    bool seen = false;
    for (auto& f : rep.anti_sandbox) seen = seen || f.technique == "cron_listing";
    CHECK(seen);
  }
  SECTION("an uneventful trace has no findings") {
    auto rep = analyze_behavior(
        parse_trace("1 getpid() = 1\n1 write(1, \"hello\", 5) = 5\n").events);
    CHECK(rep.persistence.empty());
    CHECK(rep.anti_forensics.empty());
    CHECK(rep.anti_debug.empty());
    CHECK(rep.anti_sandbox.empty());
    CHECK_FALSE(rep.kernel_module_loaded);
  }
}

TEST_CASE("appending events never removes findings") {
  const std::string base =
      "1 openat(AT_FDCWD, \"/etc/init.d/bot\", O_CREAT) = 3\n"
      "1 ptrace(PTRACE_TRACEME, 0, 0, 0) = 0\n"
      "1 open(\"/proc/cpuinfo\", O_RDONLY) = 4\n";
  auto before = analyze_behavior(parse_trace(base).events);
  auto after = analyze_behavior(parse_trace(
      base + "1 prctl(PR_SET_NAME, \"kworker\") = 0\n1 unlink(\"/tmp/self\") = 0\n").events);
  for (auto [was, is] : {std::pair{&before.persistence, &after.persistence},
                         {&before.anti_debug, &after.anti_debug},
                         {&before.anti_sandbox, &after.anti_sandbox}}) {
    for (auto& f : *was) {
      bool still = false;
      for (auto& g : *is) still = still || f == g;
      CHECK(still);
    }
  }
  CHECK(after.anti_forensics.size() >= before.anti_forensics.size());
}

TEST_CASE("every finding cites an event that exists") {
  auto t = parse_trace(
      "1 openat(AT_FDCWD, \"/etc/init.d/bot\", O_CREAT) = 3\n"
      "1 prctl(PR_SET_NAME, \"sshd\") = 0\n"
      "1 ptrace(PTRACE_TRACEME) = 0\n"
      "1 open(\"/proc/cpuinfo\") = 4\n"
      "1 execve(\"/bin/ps\", [\"ps\"], 0) = 0\n");
  auto rep = analyze_behavior(t.events);
  auto in_range = [&](const Finding& f) { return f.seq < t.events.size(); };
  for (auto* list : {&rep.persistence, &rep.anti_forensics, &rep.anti_debug, &rep.anti_sandbox})
    for (auto& f : *list) CHECK(in_range(f));
}

TEST_CASE("behavior analysis is deterministic") {
  const std::string text =
      "1 fork() = 2\n"
      "2 prctl(PR_SET_NAME, \"sshd\") = 0\n"
      "2 open(\"/proc/cpuinfo\") = 3\n"
      "1 unlink(\"/tmp/a\") = 0\n";
  auto a = to_json(analyze_behavior(parse_trace(text).events));
  auto b = to_json(analyze_behavior(parse_trace(text).events));
  CHECK(a == b);
}

TEST_CASE("behavior report round-trips through json") {
  auto rep = analyze_behavior(parse_trace(
      "1 fork() = 2\n"
      "2 prctl(PR_SET_NAME, \"sshd\") = 0\n"
      "2 openat(AT_FDCWD, \"/etc/init.d/x\", O_CREAT) = 3\n"
      "1 init_module(0x1, 2, \"\") = 0\n").events);
  auto j = to_json(rep);
  auto back = behavior_report_from_json(j);
  CHECK(to_json(back) == j);
}
