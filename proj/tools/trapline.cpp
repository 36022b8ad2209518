// Command-line front end: run the service, talk to it, run honeypots, do
// one-shot local analysis, and generate test fixtures.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "httplib.h"
#include "trapline/classify/family.hpp"
#include "trapline/core/base64.hpp"
#include "trapline/elf/elf.hpp"
#include "trapline/fixtures/scenarios.hpp"
#include "trapline/honeypot/http_honeypot.hpp"
#include "trapline/honeypot/reporter.hpp"
#include "trapline/honeypot/telnet_honeypot.hpp"
#include "trapline/pcap/analyzer.hpp"
#include "trapline/sandbox/orchestrator.hpp"
#include "trapline/service/http_api.hpp"
#include "trapline/service/pipeline.hpp"
#include "trapline/static_analysis/static_analyzer.hpp"
#include "trapline/trace/behavior.hpp"
#include "trapline/trace/events.hpp"

namespace fs = std::filesystem;
using namespace trapline;

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

// Executors come from recordings; with no recording directory every execution
// fails over to a static-only report.
class NoSandboxExecutor : public sandbox::Executor {
 public:
  sandbox::RawExecution run(const sandbox::ExecutionRequest&) override {
    fail(ErrorKind::unsupported, "no execution backend configured");
  }
};

struct HostPort {
  std::string host;
  uint16_t port;
};

HostPort split_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos)
    fail(ErrorKind::invalid_input, "listen address must be host:port, got " + listen);
  return {listen.substr(0, colon),
          static_cast<uint16_t>(std::strtoul(listen.c_str() + colon + 1, nullptr, 10))};
}

std::string endpoint_from_listen(const std::string& listen) { return "http://" + listen; }

Bytes read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io_error, "cannot read " + path);
  std::string raw((std::istreambuf_iterator<char>(in)), {});
  return Bytes(raw.begin(), raw.end());
}

std::string read_file_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io_error, "cannot read " + path);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

void print_response(const httplib::Result& res) {
  if (!res) fail(ErrorKind::network_error, "service unreachable");
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  std::cout << (j.is_discarded() ? res->body : j.dump(2)) << "\n";
  if (res->status >= 400) std::exit(1);
}

httplib::Client client_for(const std::string& endpoint) {
  auto url = parse_url(endpoint);
  if (!url) fail(ErrorKind::invalid_input, "bad endpoint: " + endpoint);
  httplib::Client cli(url->host, url->effective_port());
  cli.set_read_timeout(30, 0);
  return cli;
}

// "k=v" with light typing: integers and booleans become JSON numbers/bools
nlohmann::json parse_params(const std::vector<std::string>& kvs) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& kv : kvs) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::invalid_input, "parameter must be key=value, got " + kv);
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (val == "true" || val == "false") {
      out[key] = val == "true";
    } else if (!val.empty() && val.find_first_not_of("0123456789") == std::string::npos) {
      out[key] = std::stoull(val);
    } else {
      out[key] = val;
    }
  }
  return out;
}

int run_serve(const std::string& listen, const std::string& store, int exec_duration,
              size_t workers, const std::string& fixture_dir, const std::string& av_file,
              const std::vector<std::string>& honeypot_specs, const std::string& attack_log) {
  service::PipelineOptions opt;
  opt.store_dir = store;
  opt.workers = workers;
  opt.thresholds.default_exec_duration_sec = exec_duration;

  std::shared_ptr<sandbox::Executor> executor;
  if (fixture_dir.empty())
    executor = std::make_shared<NoSandboxExecutor>();
  else
    executor = std::make_shared<sandbox::MockExecutor>(fixture_dir);

  std::shared_ptr<classify::AvClient> av;
  if (!av_file.empty()) av = std::make_shared<classify::FileAvClient>(av_file);

  service::Pipeline pipeline(opt, executor, av);
  service::ApiServer api(pipeline);
  auto hp = split_listen(listen);
  int port = api.start(hp.host, hp.port);
  std::cout << "ingest API listening on " << hp.host << ":" << port << "\n";

  auto submit_client =
      std::make_shared<honeypot::HttpSubmitClient>("http://127.0.0.1:" + std::to_string(port));
  honeypot::Reporter reporter(attack_log.empty() ? fs::path{} : fs::path(attack_log),
                              submit_client);

  std::vector<std::unique_ptr<honeypot::TelnetHoneypot>> telnets;
  std::vector<std::unique_ptr<honeypot::HttpExploitHoneypot>> webs;
  honeypot::RecordSink sink = [&reporter](const honeypot::AttackRecord& r) {
    reporter.report(r);
  };
  for (const auto& spec : honeypot_specs) {
    auto colon = spec.find(':');
    std::string kind_name = colon == std::string::npos ? spec : spec.substr(0, colon);
    auto cfg = honeypot::honeypot_preset(honeypot::honeypot_kind_from_string(kind_name));
    if (colon != std::string::npos)
      cfg.listen_port =
          static_cast<uint16_t>(std::strtoul(spec.c_str() + colon + 1, nullptr, 10));
    cfg.report_endpoint = endpoint_from_listen(listen);
    uint16_t bound;
    if (cfg.kind == honeypot::HoneypotKind::telnet) {
      telnets.push_back(std::make_unique<honeypot::TelnetHoneypot>(cfg, sink));
      bound = telnets.back()->start(hp.host, cfg.listen_port);
    } else {
      webs.push_back(std::make_unique<honeypot::HttpExploitHoneypot>(cfg, sink));
      bound = webs.back()->start(hp.host, cfg.listen_port);
    }
    std::cout << "honeypot " << kind_name << " listening on " << hp.host << ":" << bound
              << "\n";
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    reporter.retry_pending();
  }
  std::cout << "shutting down\n";
  for (auto& t : telnets) t->stop();
  for (auto& w : webs) w->stop();
  api.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IoT botnet capture and triage toolkit"};
  app.require_subcommand(1);

  std::string listen = "127.0.0.1:8100";
  std::string store;
  int exec_duration = 60;
  app.add_option("--listen", listen, "service address (host:port)")
      ->envname("TRAPLINE_LISTEN")
      ->capture_default_str();
  app.add_option("--store", store, "persistent store directory (empty: in-memory)")
      ->envname("TRAPLINE_STORE");
  app.add_option("--exec-duration", exec_duration, "default sandbox run seconds")
      ->envname("TRAPLINE_EXEC_DURATION")
      ->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "run the ingest API (and optional honeypots)");
  std::string fixture_dir, av_file, attack_log;
  size_t workers = 2;
  std::vector<std::string> honeypot_specs;
  serve->add_option("--executor-recordings", fixture_dir,
                    "directory of pre-recorded executions (sha256/group/trace.txt)");
  serve->add_option("--av-fixture", av_file, "JSON file of canned AV verdicts");
  serve->add_option("--workers", workers, "pipeline worker threads")->capture_default_str();
  serve->add_option("--honeypot", honeypot_specs,
                    "honeypot to run, kind[:port] (repeatable); kinds: telnet, jaws, "
                    "dlink, realtek, gpon, huawei, netgear, hadoop_yarn");
  serve->add_option("--attack-log", attack_log, "append-only attack log (JSON lines)");

  // submit
  auto* submit = app.add_subcommand("submit", "submit a sample for analysis");
  std::string sub_url, sub_file, sub_hex, sub_argument, endpoint;
  int sub_duration = 0;
  bool sub_force = false;
  submit->add_option("--endpoint", endpoint, "service base URL (default from --listen)");
  auto* opt_url = submit->add_option("--url", sub_url, "payload is a distribution URL");
  auto* opt_file = submit->add_option("--file", sub_file, "payload is a local ELF file");
  auto* opt_hex = submit->add_option("--hex-file", sub_hex,
                                     "payload is a file holding an echoed hex script");
  opt_url->excludes(opt_file)->excludes(opt_hex);
  opt_file->excludes(opt_hex);
  submit->add_option("--duration", sub_duration, "execution duration seconds");
  submit->add_option("--argument", sub_argument, "execution argument");
  submit->add_flag("--force", sub_force, "re-analyze even if the hash is known");

  // status / report
  auto* status = app.add_subcommand("status", "query analysis status");
  std::string status_id;
  status->add_option("id", status_id, "submission id")->required();
  status->add_option("--endpoint", endpoint, "service base URL");
  auto* report = app.add_subcommand("report", "fetch a finished analysis report");
  std::string report_id;
  report->add_option("id", report_id, "submission id")->required();
  report->add_option("--endpoint", endpoint, "service base URL");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "one-shot local analysis, no service");
  std::string an_file, an_trace, an_capture;
  analyze->add_option("--file", an_file, "ELF file")->required();
  analyze->add_option("--trace", an_trace, "recorded syscall trace");
  analyze->add_option("--capture", an_capture, "recorded pcap");

  // honeypot (standalone)
  auto* pot = app.add_subcommand("honeypot", "run one honeypot against a remote service");
  std::string pot_kind = "telnet", pot_host = "0.0.0.0", pot_banner, pot_hostname, pot_log;
  uint16_t pot_port = 0;
  pot->add_option("--kind", pot_kind, "telnet, jaws, dlink, realtek, gpon, huawei, "
                                      "netgear, hadoop_yarn")
      ->capture_default_str();
  pot->add_option("--port", pot_port, "listen port (0: service default)");
  pot->add_option("--host", pot_host, "bind address")->capture_default_str();
  pot->add_option("--endpoint", endpoint, "ingest API base URL");
  pot->add_option("--banner", pot_banner, "override the service banner");
  pot->add_option("--hostname", pot_hostname, "override the emulated hostname");
  pot->add_option("--attack-log", pot_log, "append-only attack log (JSON lines)");

  // fixtures
  auto* fixtures_cmd = app.add_subcommand("fixtures", "generate synthetic test fixtures");
  fixtures_cmd->require_subcommand(1);
  auto* fx_list = fixtures_cmd->add_subcommand("list", "list known scenarios");
  auto* fx_gen = fixtures_cmd->add_subcommand("generate", "write a scenario's files");
  std::string fx_scenario, fx_out = ".";
  uint64_t fx_seed = 1;
  std::vector<std::string> fx_params;
  fx_gen->add_option("scenario", fx_scenario, "scenario name (see fixtures list)")->required();
  fx_gen->add_option("--out", fx_out, "output directory")->capture_default_str();
  fx_gen->add_option("--seed", fx_seed, "determinism seed")->capture_default_str();
  fx_gen->add_option("--param", fx_params, "scenario parameter key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (endpoint.empty()) endpoint = endpoint_from_listen(listen);

    if (serve->parsed())
      return run_serve(listen, store, exec_duration, workers, fixture_dir, av_file,
                       honeypot_specs, attack_log);

    if (submit->parsed()) {
      nlohmann::json body;
      if (!sub_url.empty()) {
        body["kind"] = "url";
        body["payload"] = sub_url;
      } else if (!sub_file.empty()) {
        body["kind"] = "elf_bytes";
        body["payload_b64"] = base64_encode(read_file_bytes(sub_file));
      } else if (!sub_hex.empty()) {
        body["kind"] = "hex_string";
        body["payload"] = read_file_text(sub_hex);
      } else {
        fail(ErrorKind::invalid_input, "one of --url, --file, --hex-file is required");
      }
      if (sub_duration > 0) body["exec_duration"] = sub_duration;
      if (!sub_argument.empty()) body["exec_argument"] = sub_argument;
      if (sub_force) body["force"] = true;
      body["source"] = "manual";
      auto cli = client_for(endpoint);
      print_response(cli.Post("/samples", body.dump(), "application/json"));
      return 0;
    }

    if (status->parsed()) {
      auto cli = client_for(endpoint);
      print_response(cli.Get(("/samples/" + status_id + "/status").c_str()));
      return 0;
    }

    if (report->parsed()) {
      auto cli = client_for(endpoint);
      print_response(cli.Get(("/samples/" + report_id + "/report").c_str()));
      return 0;
    }

    if (analyze->parsed()) {
      Bytes bytes = read_file_bytes(an_file);
      auto img = elf::parse_elf(bytes, fs::path(an_file).filename().string());
      if (!img.valid) fail(ErrorKind::invalid_input, "not an ELF binary: " + img.error);
      nlohmann::json out;
      out["sample"] = {{"sha256", sha256_hex(bytes)},
                       {"size", bytes.size()},
                       {"cpu_arch", to_string(img.cpu_arch)}};
      out["static"] = static_analysis::to_json(static_analysis::analyze_static(img));
      if (!an_trace.empty()) {
        auto parsed = trace::parse_trace(read_file_text(an_trace));
        out["behavior"] = trace::to_json(trace::analyze_behavior(parsed.events));
      }
      if (!an_capture.empty())
        out["network"] = pcap::to_json(pcap::analyze_capture(read_file_bytes(an_capture)));
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (pot->parsed()) {
      auto cfg = honeypot::honeypot_preset(honeypot::honeypot_kind_from_string(pot_kind));
      if (pot_port != 0) cfg.listen_port = pot_port;
      if (!pot_banner.empty()) cfg.banner = pot_banner;
      if (!pot_hostname.empty()) cfg.hostname = pot_hostname;
      cfg.report_endpoint = endpoint;
      auto client = std::make_shared<honeypot::HttpSubmitClient>(cfg.report_endpoint);
      honeypot::Reporter reporter(pot_log.empty() ? fs::path{} : fs::path(pot_log), client);
      honeypot::RecordSink sink = [&reporter](const honeypot::AttackRecord& r) {
        auto id = reporter.report(r);
        std::cout << honeypot::to_json(r).dump() << (id ? " -> " + *id : "") << "\n";
      };

      uint16_t bound;
      std::unique_ptr<honeypot::TelnetHoneypot> telnet;
      std::unique_ptr<honeypot::HttpExploitHoneypot> web;
      if (cfg.kind == honeypot::HoneypotKind::telnet) {
        telnet = std::make_unique<honeypot::TelnetHoneypot>(cfg, sink);
        bound = telnet->start(pot_host, cfg.listen_port);
      } else {
        web = std::make_unique<honeypot::HttpExploitHoneypot>(cfg, sink);
        bound = web->start(pot_host, cfg.listen_port);
      }
      std::cout << "honeypot " << pot_kind << " listening on " << pot_host << ":" << bound
                << ", reporting to " << cfg.report_endpoint << "\n";

      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        reporter.retry_pending();
      }
      if (telnet) telnet->stop();
      if (web) web->stop();
      return 0;
    }

    if (fx_list->parsed()) {
      for (const auto& s : fixtures::fixture_scenarios()) std::cout << s << "\n";
      return 0;
    }

    if (fx_gen->parsed()) {
      fixtures::FixtureSpec spec{fx_scenario, parse_params(fx_params), fx_seed};
      auto fixture = fixtures::generate_fixture(spec);
      fs::create_directories(fx_out);
      for (const auto& [name, bytes] : fixture.files) {
        std::ofstream out(fs::path(fx_out) / name, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        std::cout << (fs::path(fx_out) / name).string() << " (" << bytes.size()
                  << " bytes)\n";
      }
      std::ofstream exp(fs::path(fx_out) / "expected.json");
      exp << fixture.expected.dump(2) << "\n";
      std::cout << (fs::path(fx_out) / "expected.json").string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
