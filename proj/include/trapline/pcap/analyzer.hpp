#pragma once

#include <json.hpp>

#include "trapline/pcap/application.hpp"
#include "trapline/pcap/heuristics.hpp"

namespace trapline::pcap {

struct NetworkReport {
  std::vector<ScanFinding> scans;
  std::vector<C2Finding> c2;
  bool p2p = false;
  std::vector<DdosFinding> ddos;
  bool spoofing_detected = false;
  std::vector<std::string> dns_queries;
  std::vector<HttpRequest> http_requests;
  TorFindings tor;
  bool bittorrent_detected = false;
};

inline NetworkReport analyze_capture(const Bytes& capture_bytes,
                                     const Thresholds& th = Thresholds{},
                                     const Rulesets& rules = default_rulesets()) {
  FlowTable flows = assemble_flows(capture_bytes);
  NetworkReport rep;
  rep.scans = detect_scans(flows, th);
  std::tie(rep.c2, rep.p2p) = detect_c2(flows, th);
  std::tie(rep.ddos, rep.spoofing_detected) = detect_ddos(flows, th);
  AppFindings app = extract_application(capture_bytes, rules);
  rep.dns_queries = std::move(app.dns_queries);
  rep.http_requests = std::move(app.http_requests);
  rep.tor = std::move(app.tor);
  rep.bittorrent_detected = app.bittorrent_detected;
  return rep;
}

inline nlohmann::json to_json(const NetworkReport& r) {
  nlohmann::json scans = nlohmann::json::array();
  for (const auto& s : r.scans)
    scans.push_back({{"port", s.port}, {"kind", s.kind}, {"hosts_scanned", s.hosts_scanned}});
  nlohmann::json c2 = nlohmann::json::array();
  for (const auto& c : r.c2)
    c2.push_back({{"host", c.host}, {"port", c.port}, {"protocol", c.protocol}});
  nlohmann::json ddos = nlohmann::json::array();
  for (const auto& d : r.ddos) {
    nlohmann::json e{{"victim", d.victim}, {"kind", d.kind}};
    if (d.port) e["port"] = *d.port;
    ddos.push_back(std::move(e));
  }
  nlohmann::json http = nlohmann::json::array();
  for (const auto& q : r.http_requests)
    http.push_back({{"host", q.host},
                    {"uri", q.uri},
                    {"user_agent", q.user_agent},
                    {"exploit_keyword_hits", q.exploit_keyword_hits}});
  return {
      {"scans", scans},
      {"c2", c2},
      {"p2p", r.p2p},
      {"ddos", ddos},
      {"spoofing_detected", r.spoofing_detected},
      {"dns_queries", r.dns_queries},
      {"http_requests", http},
      {"tor",
       {{"onion_domains", r.tor.onion_domains},
        {"gateway_connections", r.tor.gateway_connections}}},
      {"bittorrent_detected", r.bittorrent_detected},
  };
}

inline NetworkReport network_report_from_json(const nlohmann::json& j) {
  NetworkReport r;
  for (const auto& s : j.at("scans"))
    r.scans.push_back({s.at("port").get<uint16_t>(), s.at("kind").get<std::string>(),
                       s.at("hosts_scanned").get<size_t>()});
  for (const auto& c : j.at("c2"))
    r.c2.push_back({c.at("host").get<std::string>(), c.at("port").get<uint16_t>(),
                    c.at("protocol").get<std::string>()});
  r.p2p = j.at("p2p").get<bool>();
  for (const auto& d : j.at("ddos")) {
    DdosFinding f;
    f.victim = d.at("victim").get<std::string>();
    if (d.contains("port")) f.port = d.at("port").get<uint16_t>();
    f.kind = d.at("kind").get<std::string>();
    r.ddos.push_back(std::move(f));
  }
  r.spoofing_detected = j.at("spoofing_detected").get<bool>();
  r.dns_queries = j.at("dns_queries").get<std::vector<std::string>>();
  for (const auto& q : j.at("http_requests"))
    r.http_requests.push_back({q.at("host").get<std::string>(), q.at("uri").get<std::string>(),
                               q.at("user_agent").get<std::string>(),
                               q.at("exploit_keyword_hits").get<std::vector<std::string>>()});
  r.tor.onion_domains = j.at("tor").at("onion_domains").get<std::vector<std::string>>();
  r.tor.gateway_connections = j.at("tor").at("gateway_connections").get<std::vector<std::string>>();
  r.bittorrent_detected = j.at("bittorrent_detected").get<bool>();
  return r;
}

}  // namespace trapline::pcap
