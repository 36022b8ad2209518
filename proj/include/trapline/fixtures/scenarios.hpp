#pragma once

// Named fixture scenarios on top of the low-level builders. Each scenario is
// deterministic under a fixed seed and carries the findings the analyzers are
// expected to produce, so tests can cross-check both directions.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapline/classify/cluster.hpp"
#include "trapline/core/error.hpp"
#include "trapline/core/sha256.hpp"
#include "trapline/fixtures/elf_builder.hpp"
#include "trapline/fixtures/pcap_builder.hpp"
#include "trapline/fixtures/trace_builder.hpp"

namespace trapline::fixtures {

struct FixtureSpec {
  std::string scenario;
  nlohmann::json parameters = nlohmann::json::object();
  uint64_t seed = 1;
};

struct GeneratedFixture {
  std::map<std::string, Bytes> files;
  nlohmann::json expected;
};

namespace detail {

template <typename T>
T param(const FixtureSpec& spec, const std::string& key, T fallback) {
  return spec.parameters.value(key, fallback);
}

inline Bytes text_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace detail

// Packet-capture scenarios: scans, C2 traffic, floods.
inline Bytes build_pcap(const FixtureSpec& spec) {
  using detail::param;
  CaptureBuilder cap;
  if (spec.scenario == "syn-sweep") {
    cap.syn_sweep(static_cast<uint16_t>(param(spec, "port", 23)),
                  param(spec, "hosts", size_t{50}), param(spec, "completed", size_t{0}));
  } else if (spec.scenario == "fin-scan") {
    cap.fin_scan(static_cast<uint16_t>(param(spec, "port", 23)),
                 param(spec, "hosts", size_t{30}));
  } else if (spec.scenario == "c2-heartbeat") {
    cap.c2_session(param(spec, "host", std::string("198.51.100.5")),
                   static_cast<uint16_t>(param(spec, "port", 6667)),
                   param(spec, "data_packets", size_t{4}));
  } else if (spec.scenario == "p2p-swarm") {
    size_t peers = param(spec, "peers", size_t{6});
    for (size_t i = 0; i < peers; i++)
      cap.c2_session("198.51.101." + std::to_string(i + 1),
                     static_cast<uint16_t>(param(spec, "port", 48101)),
                     param(spec, "data_packets", size_t{2}),
                     static_cast<uint16_t>(42000 + i));
  } else if (spec.scenario == "udp-flood") {
    cap.udp_flood(param(spec, "victim", std::string("203.0.113.80")),
                  static_cast<uint16_t>(param(spec, "port", 80)),
                  param(spec, "datagrams", size_t{5000}));
  } else if (spec.scenario == "syn-flood") {
    if (param(spec, "spoofed", false))
      cap.spoofed_syn_flood(param(spec, "victim", std::string("203.0.113.80")),
                            static_cast<uint16_t>(param(spec, "port", 80)),
                            param(spec, "syns", size_t{2000}), spec.seed);
    else
      cap.syn_flood(param(spec, "victim", std::string("203.0.113.80")),
                    static_cast<uint16_t>(param(spec, "port", 80)),
                    param(spec, "syns", size_t{2000}));
  } else if (spec.scenario == "ack-flood") {
    cap.ack_flood(param(spec, "victim", std::string("203.0.113.80")),
                  static_cast<uint16_t>(param(spec, "port", 80)),
                  param(spec, "acks", size_t{1500}));
  } else {
    fail(ErrorKind::unsupported, "unknown pcap scenario: " + spec.scenario);
  }
  return cap.build();
}

// Syscall-trace scenarios: persistence, anti-analysis, process shapes.
inline std::string build_trace(const FixtureSpec& spec) {
  using detail::param;
  TraceBuilder tb;
  if (spec.scenario == "persistence") {
    tb.benign_padding()
        .open_write(param(spec, "location", std::string("/etc/init.d/upd")), "start()")
        .exit();
  } else if (spec.scenario == "anti-forensics") {
    tb.benign_padding().unlink_path(param(spec, "path", std::string("/var/log/wtmp"))).exit();
  } else if (spec.scenario == "anti-debug") {
    tb.benign_padding().ptrace_traceme().exit();
  } else if (spec.scenario == "anti-sandbox") {
    tb.benign_padding()
        .probe_file(param(spec, "path", std::string("/sys/class/dmi/id/product_name")))
        .exit();
  } else if (spec.scenario == "fork-chain") {
    tb.benign_padding().fork_chain(param(spec, "count", 3)).exit();
  } else if (spec.scenario == "dropper-trace") {
    std::string file = param(spec, "file", std::string("/tmp/loligang.arm7"));
    tb.benign_padding()
        .open_write(file, "\\177ELF\\001\\001\\001")
        .chmod_file(file)
        .execve_file(file)
        .exit();
  } else if (spec.scenario == "crashed") {
    tb.restart_run(param(spec, "count", 10));
  } else if (spec.scenario == "benign") {
    tb.benign_padding(param(spec, "events_of_three", 3400)).exit();
  } else {
    fail(ErrorKind::unsupported, "unknown trace scenario: " + spec.scenario);
  }
  return tb.build();
}

// Minimal-ELF scenario front end over build_min_elf.
inline Bytes build_elf(const FixtureSpec& spec) {
  using detail::param;
  if (spec.scenario != "min-elf" && spec.scenario != "uniform-elf")
    fail(ErrorKind::unsupported, "unknown elf scenario: " + spec.scenario);
  MinElfSpec mes;
  auto arch_name = param(spec, "arch", std::string("arm"));
  auto arch = elf::arch_from_string(arch_name);
  if (!arch) fail(ErrorKind::invalid_input, "unknown arch: " + arch_name);
  mes.arch = *arch;
  mes.linking = param(spec, "linking", std::string("static")) == "dynamic"
                    ? elf::Linking::dynamic_linked
                    : elf::Linking::static_linked;
  mes.stripped = param(spec, "stripped", true);
  mes.seed = spec.seed;
  mes.payload_size = param(spec, "size", size_t{1024});
  std::string entropy =
      spec.scenario == "uniform-elf" ? "uniform" : param(spec, "entropy", std::string("text"));
  if (entropy == "constant") mes.payload_entropy = PayloadEntropy::constant;
  else if (entropy == "uniform") mes.payload_entropy = PayloadEntropy::uniform;
  else if (entropy == "random") mes.payload_entropy = PayloadEntropy::random;
  else mes.payload_entropy = PayloadEntropy::text;
  for (const auto& s : param(spec, "strings", std::vector<std::string>{}))
    mes.embedded_strings.push_back(s);
  return build_min_elf(mes);
}

// Facts for the three-server clustering exercise: five samples, one campaign,
// identical naming and traits, C2 port overridable to split the cluster.
inline std::vector<classify::SampleFacts> clustering_facts(int c2_port_last = 47001) {
  auto make = [](const std::string& sha, const std::string& server, int c2_port) {
    classify::SampleFacts f;
    f.sha256 = sha;
    f.md_server = server;
    f.url_path = "/919100h/";
    f.file_name = "nomn0m";
    f.ports_scanned = {23, 80, 8081, 37215, 52869};
    f.c2_endpoints = {"agakarakoccnc.duckdns.org:" + std::to_string(c2_port)};
    f.linking = elf::Linking::static_linked;
    f.packing = static_analysis::Packing::standard_upx;
    return f;
  };
  return {
      make("a1", "45.148.10.154", 47001), make("a2", "45.148.10.154", 47001),
      make("b1", "45.148.10.89", 47001),  make("b2", "45.148.10.89", 47001),
      make("c1", "81.19.215.118", c2_port_last),
  };
}

inline std::vector<std::string> fixture_scenarios() {
  return {"syn-sweep",     "fin-scan",     "c2-heartbeat", "p2p-swarm",
          "udp-flood",     "syn-flood",    "ack-flood",    "persistence",
          "anti-forensics", "anti-debug",  "anti-sandbox", "fork-chain",
          "dropper-trace", "crashed",      "benign",       "min-elf",
          "uniform-elf",   "clustering",   "e2e"};
}

// One entry point for the CLI: returns the files a scenario produces plus the
// findings they should trigger.
inline GeneratedFixture generate_fixture(const FixtureSpec& spec) {
  using detail::param;
  GeneratedFixture out;
  const std::string& s = spec.scenario;

  if (s == "syn-sweep" || s == "fin-scan" || s == "c2-heartbeat" || s == "p2p-swarm" ||
      s == "udp-flood" || s == "syn-flood" || s == "ack-flood") {
    out.files["capture.pcap"] = build_pcap(spec);
    if (s == "syn-sweep") {
      size_t hosts = param(spec, "hosts", size_t{50});
      size_t completed = param(spec, "completed", size_t{0});
      out.expected["scan_fires"] =
          hosts >= 10 && static_cast<double>(completed) / static_cast<double>(hosts) < 0.20;
      out.expected["hosts"] = hosts;
      out.expected["port"] = param(spec, "port", 23);
    } else if (s == "fin-scan") {
      out.expected["scan_fires"] = param(spec, "hosts", size_t{30}) >= 10;
      out.expected["stealth"] = true;
    } else if (s == "c2-heartbeat") {
      out.expected["c2_endpoints"] = {param(spec, "host", std::string("198.51.100.5")) + ":" +
                                      std::to_string(param(spec, "port", 6667))};
    } else if (s == "p2p-swarm") {
      out.expected["p2p"] = param(spec, "peers", size_t{6}) > 5;
    } else {
      out.expected["flood"] = s.substr(0, s.find('-'));
    }
  } else if (s == "persistence" || s == "anti-forensics" || s == "anti-debug" ||
             s == "anti-sandbox" || s == "fork-chain" || s == "dropper-trace" ||
             s == "crashed" || s == "benign") {
    out.files["trace.txt"] = detail::text_bytes(build_trace(spec));
    if (s == "persistence") out.expected["persistence_findings"] = 1;
    if (s == "anti-forensics") out.expected["anti_forensics_findings"] = 1;
    if (s == "anti-debug") out.expected["anti_debug_findings"] = 1;
    if (s == "anti-sandbox") out.expected["anti_sandbox_findings"] = 1;
    if (s == "fork-chain") out.expected["forks"] = param(spec, "count", 3);
    if (s == "dropper-trace")
      out.expected["elf_files_written"] = {param(spec, "file", std::string("/tmp/loligang.arm7"))};
    if (s == "crashed") out.expected["corrupt_execution"] = true;
    if (s == "benign")
      out.expected["benign"] = true;
  } else if (s == "min-elf" || s == "uniform-elf") {
    Bytes elf = build_elf(spec);
    out.expected["sha256"] = sha256_hex(elf);
    out.expected["arch"] = param(spec, "arch", std::string("arm"));
    if (s == "uniform-elf") out.expected["payload_entropy"] = 8.0;
    out.files["sample.elf"] = std::move(elf);
  } else if (s == "clustering") {
    int c2_port_last = param(spec, "c2_port_last", 47001);
    nlohmann::json facts = nlohmann::json::array();
    for (const auto& f : clustering_facts(c2_port_last)) facts.push_back(nlohmann::json(f));
    out.files["facts.json"] = detail::text_bytes(facts.dump(2));
    out.expected["botnets"] = c2_port_last == 47001 ? 1 : 2;
    out.expected["instances"] = 3;
  } else if (s == "e2e") {
    std::string md_url =
        param(spec, "md_url", std::string("http://192.236.146.234:80/lmaoWTF/loligang.arm7"));
    std::string family = param(spec, "family", std::string("mirai"));

    FixtureSpec elf_spec{"min-elf", {{"strings", {md_url}}}, spec.seed};
    Bytes elf = build_elf(elf_spec);
    std::string sha = sha256_hex(elf);

    TraceBuilder tb;
    tb.connect_tcp("198.51.100.5", 6667)
        .open_write("/etc/init.d/upd", "start()")
        .benign_padding()
        .exit();
    CaptureBuilder cap;
    cap.syn_sweep(23, 12, 1).c2_session("198.51.100.5", 6667);

    nlohmann::json av;
    av[sha] = {{{"engine", "scanner-a"}, {"label", "Linux." + family + ".A"}},
               {{"engine", "scanner-b"}, {"label", family + ".gen"}},
               {{"engine", "scanner-c"}, {"label", "Trojan.Generic"}}};

    out.files["sample.elf"] = std::move(elf);
    out.files["trace.txt"] = detail::text_bytes(tb.build());
    out.files["capture.pcap"] = cap.build();
    out.files["av.json"] = detail::text_bytes(av.dump(2));
    out.expected["sha256"] = sha;
    out.expected["md_url"] = md_url;
    out.expected["family"] = family;
    out.expected["scan_port"] = 23;
  } else {
    fail(ErrorKind::unsupported, "unknown fixture scenario: " + s);
  }
  return out;
}

}  // namespace trapline::fixtures
