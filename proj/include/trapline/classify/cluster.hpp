#pragma once

// Botnet clustering. Samples are grouped into download instances per
// malware-distribution server, instances that serve the same content are
// merged, and groups with matching network and build traits are merged again.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "trapline/core/url.hpp"
#include "trapline/elf/elf.hpp"
#include "trapline/pcap/analyzer.hpp"
#include "trapline/static_analysis/static_analyzer.hpp"
#include <json.hpp>

namespace trapline::classify {

// Everything clustering needs to know about one sample.
struct SampleFacts {
  std::string sha256;
  std::string md_server;                // host the binary was downloaded from
  std::string url_path;                 // directory part of the download URL
  std::string file_name;                // basename of the download URL
  std::set<uint16_t> ports_scanned;
  std::set<std::string> c2_endpoints;   // "host:port"
  elf::Linking linking = elf::Linking::static_linked;
  static_analysis::Packing packing = static_analysis::Packing::none;
};

inline SampleFacts make_facts(const std::string& sha256, const Url& source,
                              const static_analysis::StaticReport& st,
                              const pcap::NetworkReport& net) {
  SampleFacts f;
  f.sha256 = sha256;
  f.md_server = source.host;
  f.url_path = source.directory();
  f.file_name = source.basename();
  for (const auto& s : net.scans) f.ports_scanned.insert(s.port);
  for (const auto& c : net.c2)
    f.c2_endpoints.insert(c.host + ":" + std::to_string(c.port));
  f.linking = st.linking;
  f.packing = st.packing;
  return f;
}

inline void to_json(nlohmann::json& j, const SampleFacts& f) {
  j = nlohmann::json{{"sha256", f.sha256},
                     {"md_server", f.md_server},
                     {"url_path", f.url_path},
                     {"file_name", f.file_name},
                     {"ports_scanned", f.ports_scanned},
                     {"c2_endpoints", f.c2_endpoints},
                     {"linking", elf::to_string(f.linking)},
                     {"packing", static_analysis::to_string(f.packing)}};
}

inline void from_json(const nlohmann::json& j, SampleFacts& f) {
  f.sha256 = j.at("sha256").get<std::string>();
  f.md_server = j.value("md_server", std::string{});
  f.url_path = j.value("url_path", std::string{});
  f.file_name = j.value("file_name", std::string{});
  f.ports_scanned = j.value("ports_scanned", std::set<uint16_t>{});
  f.c2_endpoints = j.value("c2_endpoints", std::set<std::string>{});
  f.linking = elf::linking_from_string(j.value("linking", "static"));
  f.packing = static_analysis::packing_from_string(j.value("packing", "none"));
}

struct BotnetInstance {
  std::string md_server;
  std::vector<std::string> samples;  // sorted sample hashes

  bool operator==(const BotnetInstance&) const = default;
};

// Traits every member of a cluster was merged on.
struct SharedTraits {
  std::vector<std::string> file_name_pattern;  // served file names, sorted
  std::vector<uint16_t> ports_scanned;
  std::vector<std::string> c2_endpoints;
  std::vector<std::string> linking;
  std::vector<std::string> obfuscation;  // packing classes seen

  bool operator==(const SharedTraits&) const = default;
};

struct BotnetCluster {
  std::string botnet_id;
  std::vector<BotnetInstance> instances;  // sorted by server
  SharedTraits shared;

  bool operator==(const BotnetCluster&) const = default;
};

struct Clustering {
  std::vector<BotnetCluster> botnets;
  // Cluster counts after each pass; merging can only shrink them.
  std::array<size_t, 3> pass_clusters{0, 0, 0};
};

namespace detail {

template <typename T>
inline void append_join(std::string& out, const std::set<T>& items) {
  for (const auto& it : items) {
    if constexpr (std::is_same_v<T, std::string>)
      out += it;
    else
      out += std::to_string(it);
    out += ',';
  }
  out += '|';
}

inline std::string traits_key(const std::vector<const SampleFacts*>& members) {
  std::set<uint16_t> ports;
  std::set<std::string> c2, linking, packing;
  for (const SampleFacts* m : members) {
    ports.insert(m->ports_scanned.begin(), m->ports_scanned.end());
    c2.insert(m->c2_endpoints.begin(), m->c2_endpoints.end());
    linking.insert(elf::to_string(m->linking));
    packing.insert(static_analysis::to_string(m->packing));
  }
  std::string key;
  append_join(key, ports);
  append_join(key, c2);
  append_join(key, linking);
  append_join(key, packing);
  return key;
}

inline std::string naming_key(const std::vector<const SampleFacts*>& members) {
  std::set<std::string> paths, names;
  for (const SampleFacts* m : members) {
    paths.insert(m->url_path);
    names.insert(m->file_name);
  }
  std::string key;
  append_join(key, paths);
  append_join(key, names);
  return key;
}

}  // namespace detail

// Three merge passes: (1) one instance per distribution server, (2) instances
// serving identical content under identical traits become one group, (3)
// groups with identical traits merge even when file naming differs. Content
// equality alone is not enough at pass 2: two servers pushing the same file
// name at different C2 endpoints are different operations, so the traits key
// guards both merge passes.
inline Clustering cluster_botnets(std::vector<SampleFacts> facts) {
  std::sort(facts.begin(), facts.end(),
            [](const SampleFacts& a, const SampleFacts& b) { return a.sha256 < b.sha256; });
  facts.erase(std::unique(facts.begin(), facts.end(),
                          [](const SampleFacts& a, const SampleFacts& b) {
                            return a.sha256 == b.sha256;
                          }),
              facts.end());

  using Members = std::vector<const SampleFacts*>;
  Clustering out;

  std::map<std::string, Members> by_server;
  for (const SampleFacts& f : facts) by_server[f.md_server].push_back(&f);
  out.pass_clusters[0] = by_server.size();

  std::map<std::string, Members> by_content;
  for (auto& [server, members] : by_server) {
    std::string key = detail::naming_key(members) + '#' + detail::traits_key(members);
    auto& dst = by_content[key];
    dst.insert(dst.end(), members.begin(), members.end());
  }
  out.pass_clusters[1] = by_content.size();

  std::map<std::string, Members> by_traits;
  for (auto& [key, members] : by_content) {
    auto& dst = by_traits[detail::traits_key(members)];
    dst.insert(dst.end(), members.begin(), members.end());
  }
  out.pass_clusters[2] = by_traits.size();

  for (auto& [key, members] : by_traits) {
    BotnetCluster cluster;
    std::map<std::string, std::set<std::string>> instances;
    std::set<std::string> names;
    std::set<uint16_t> ports;
    std::set<std::string> c2, linking, packing;
    for (const SampleFacts* m : members) {
      instances[m->md_server].insert(m->sha256);
      names.insert(m->file_name);
      ports.insert(m->ports_scanned.begin(), m->ports_scanned.end());
      c2.insert(m->c2_endpoints.begin(), m->c2_endpoints.end());
      linking.insert(elf::to_string(m->linking));
      packing.insert(static_analysis::to_string(m->packing));
    }
    for (auto& [server, samples] : instances)
      cluster.instances.push_back({server, {samples.begin(), samples.end()}});
    cluster.shared.file_name_pattern = {names.begin(), names.end()};
    cluster.shared.ports_scanned = {ports.begin(), ports.end()};
    cluster.shared.c2_endpoints = {c2.begin(), c2.end()};
    cluster.shared.linking = {linking.begin(), linking.end()};
    cluster.shared.obfuscation = {packing.begin(), packing.end()};
    out.botnets.push_back(std::move(cluster));
  }

  // Deterministic ids regardless of input order: clusters sorted by their
  // smallest member hash, then numbered.
  auto min_sha = [](const BotnetCluster& c) {
    std::string m = c.instances.front().samples.front();
    for (const auto& inst : c.instances)
      if (inst.samples.front() < m) m = inst.samples.front();
    return m;
  };
  std::sort(out.botnets.begin(), out.botnets.end(),
            [&](const BotnetCluster& a, const BotnetCluster& b) {
              return min_sha(a) < min_sha(b);
            });
  for (size_t i = 0; i < out.botnets.size(); ++i)
    out.botnets[i].botnet_id = "botnet-" + std::to_string(i + 1);
  return out;
}

inline void to_json(nlohmann::json& j, const BotnetInstance& i) {
  j = nlohmann::json{{"md_server", i.md_server}, {"samples", i.samples}};
}

inline void from_json(const nlohmann::json& j, BotnetInstance& i) {
  i.md_server = j.at("md_server").get<std::string>();
  i.samples = j.value("samples", std::vector<std::string>{});
}

inline void to_json(nlohmann::json& j, const SharedTraits& s) {
  j = nlohmann::json{{"file_name_pattern", s.file_name_pattern},
                     {"ports_scanned", s.ports_scanned},
                     {"c2_endpoints", s.c2_endpoints},
                     {"linking", s.linking},
                     {"obfuscation", s.obfuscation}};
}

inline void from_json(const nlohmann::json& j, SharedTraits& s) {
  s.file_name_pattern = j.value("file_name_pattern", std::vector<std::string>{});
  s.ports_scanned = j.value("ports_scanned", std::vector<uint16_t>{});
  s.c2_endpoints = j.value("c2_endpoints", std::vector<std::string>{});
  s.linking = j.value("linking", std::vector<std::string>{});
  s.obfuscation = j.value("obfuscation", std::vector<std::string>{});
}

inline void to_json(nlohmann::json& j, const BotnetCluster& c) {
  j = nlohmann::json{{"botnet_id", c.botnet_id},
                     {"instances", c.instances},
                     {"shared", c.shared}};
}

inline void from_json(const nlohmann::json& j, BotnetCluster& c) {
  c.botnet_id = j.at("botnet_id").get<std::string>();
  c.instances = j.value("instances", std::vector<BotnetInstance>{});
  c.shared = j.value("shared", SharedTraits{});
}

inline void to_json(nlohmann::json& j, const Clustering& c) {
  j = nlohmann::json{{"botnets", c.botnets}, {"pass_clusters", c.pass_clusters}};
}

inline void from_json(const nlohmann::json& j, Clustering& c) {
  c.botnets = j.value("botnets", std::vector<BotnetCluster>{});
  c.pass_clusters = j.value("pass_clusters", std::array<size_t, 3>{0, 0, 0});
}

}  // namespace trapline::classify
