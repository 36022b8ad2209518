#pragma once

// Work-queue pipeline walking each submission through
// queued -> parsing -> executing -> analyzing -> done|failed, with duplicate
// short-circuiting, dropper resubmission, blacklist pushes, and reclustering.

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "trapline/classify/cluster.hpp"
#include "trapline/classify/family.hpp"
#include "trapline/core/config.hpp"
#include "trapline/core/error.hpp"
#include "trapline/core/sha256.hpp"
#include "trapline/core/store.hpp"
#include "trapline/core/url.hpp"
#include "trapline/elf/elf.hpp"
#include "trapline/parsers/hex_script.hpp"
#include "trapline/parsers/shell_script.hpp"
#include "trapline/parsers/url_fetch.hpp"
#include "trapline/pcap/analyzer.hpp"
#include "trapline/report/blacklist.hpp"
#include "trapline/report/report.hpp"
#include "trapline/sandbox/orchestrator.hpp"
#include "trapline/sandbox/profiles.hpp"
#include "trapline/service/types.hpp"
#include "trapline/static_analysis/static_analyzer.hpp"
#include "trapline/trace/behavior.hpp"
#include "trapline/trace/events.hpp"

namespace trapline::service {

// Downloader seam so tests can serve bodies without sockets.
class UrlFetcher {
 public:
  virtual ~UrlFetcher() = default;
  virtual parsers::FetchResult fetch(const std::string& url) = 0;
};

class HttpUrlFetcher : public UrlFetcher {
 public:
  explicit HttpUrlFetcher(const Thresholds& th) : th_(th) {}
  parsers::FetchResult fetch(const std::string& url) override {
    return parsers::fetch_url(url, th_);
  }

 private:
  Thresholds th_;
};

namespace detail {

class NoAvClient : public classify::AvClient {
 public:
  std::optional<classify::AvScan> scan(const std::string&) override { return std::nullopt; }
};

class NullAbuseClient : public report::AbuseClient {
 public:
  void submit(const std::string&) override {}
};

}  // namespace detail

struct PipelineOptions {
  Thresholds thresholds{};
  Rulesets rulesets = default_rulesets();
  std::filesystem::path store_dir;  // empty keeps every store in memory
  size_t workers = 2;
};

class Pipeline {
 public:
  Pipeline(PipelineOptions opt, std::shared_ptr<sandbox::Executor> executor,
           std::shared_ptr<classify::AvClient> av = nullptr,
           std::shared_ptr<report::AbuseClient> abuse = nullptr,
           std::shared_ptr<UrlFetcher> fetcher = nullptr)
      : opt_(std::move(opt)),
        executor_(std::move(executor)),
        av_(av ? std::move(av) : std::make_shared<detail::NoAvClient>()),
        abuse_(abuse ? std::move(abuse) : std::make_shared<detail::NullAbuseClient>()),
        fetcher_(fetcher ? std::move(fetcher)
                         : std::make_shared<HttpUrlFetcher>(opt_.thresholds)),
        submissions_(make_store(opt_.store_dir, "submissions.jsonl")),
        statuses_(make_store(opt_.store_dir, "statuses.jsonl")),
        facts_(make_store(opt_.store_dir, "facts.jsonl")),
        reports_(opt_.store_dir.empty() ? report::ReportStore()
                                        : report::ReportStore(opt_.store_dir / "reports.jsonl")),
        blacklist_(opt_.store_dir.empty()
                       ? report::BlacklistStore()
                       : report::BlacklistStore(opt_.store_dir / "blacklist.jsonl")) {
    if (!executor_) fail(ErrorKind::invalid_input, "pipeline needs an executor");
    for (const auto& id : submissions_.keys())
      if (id.rfind("sub-", 0) == 0)
        counter_ = std::max(counter_, std::strtoul(id.c_str() + 4, nullptr, 10));
    size_t workers = opt_.workers ? opt_.workers : 1;
    for (size_t i = 0; i < workers; ++i)
      threads_.emplace_back([this] { worker_loop(); });
  }

  ~Pipeline() { stop(); }
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  Submission submit(PayloadKind kind, std::string payload,
                    std::optional<int> exec_duration = std::nullopt,
                    std::optional<std::string> exec_argument = std::nullopt,
                    Source source = Source::manual, bool force = false, int depth = 0) {
    if (payload.empty()) fail(ErrorKind::invalid_input, "empty payload");
    if (kind == PayloadKind::url && !parse_url(payload))
      fail(ErrorKind::invalid_input, "malformed URL: " + payload);
    if (exec_duration && (*exec_duration < 1 || *exec_duration > 3600))
      fail(ErrorKind::invalid_input, "exec_duration out of range [1, 3600]");

    Submission sub;
    sub.payload_kind = kind;
    sub.payload = std::move(payload);
    sub.exec_duration = exec_duration;
    sub.exec_argument = std::move(exec_argument);
    sub.source = source;
    sub.received_at = now_iso();
    sub.depth = depth;
    sub.force = force;
    {
      std::lock_guard lock(submit_mu_);
      do {
        char buf[16];
        std::snprintf(buf, sizeof buf, "sub-%06lu", ++counter_);
        sub.id = buf;
      } while (submissions_.contains(sub.id));
      submissions_.put(sub.id, sub);
      AnalysisStatus st;
      st.submission_id = sub.id;
      st.history = {"queued"};
      statuses_.put(sub.id, st);
    }
    {
      std::lock_guard lock(queue_mu_);
      queue_.push_back(sub);
    }
    queue_cv_.notify_one();
    return sub;
  }

  AnalysisStatus status(const std::string& id) const {
    auto doc = statuses_.get(id);
    if (!doc) fail(ErrorKind::not_found, "unknown submission: " + id);
    return doc->get<AnalysisStatus>();
  }

  report::AnalysisReport get_report(const std::string& id) const {
    AnalysisStatus st = status(id);
    if (st.state != State::done)
      fail(ErrorKind::conflict,
           "analysis not finished: state=" + std::string(to_string(st.state)));
    auto rep = reports_.by_hash(st.sample_sha256);
    if (!rep) fail(ErrorKind::not_found, "report missing for " + st.sample_sha256);
    return *rep;
  }

  std::optional<report::AnalysisReport> report_by_hash(const std::string& sha256) const {
    return reports_.by_hash(sha256);
  }

  classify::Clustering clusters() const {
    std::vector<classify::SampleFacts> facts;
    for (const auto& [sha, doc] : facts_.all())
      facts.push_back(doc.get<classify::SampleFacts>());
    return classify::cluster_botnets(std::move(facts));
  }

  std::vector<report::BlacklistEntry> blacklist() const { return blacklist_.entries(); }
  std::vector<std::string> blacklist_candidates() const { return blacklist_.candidates(); }
  size_t submission_count() const { return submissions_.size(); }
  size_t report_count() const { return reports_.size(); }

  // Blocks until the queue is empty and every worker is idle.
  void drain() {
    std::unique_lock lock(queue_mu_);
    drain_cv_.wait(lock, [&] { return queue_.empty() && busy_ == 0; });
  }

  void stop() {
    {
      std::lock_guard lock(queue_mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : threads_)
      if (t.joinable()) t.join();
  }

 private:
  static JsonlStore make_store(const std::filesystem::path& dir, const char* name) {
    if (dir.empty()) return JsonlStore();
    std::filesystem::create_directories(dir);
    return JsonlStore(dir / name);
  }

  void worker_loop() {
    for (;;) {
      Submission sub;
      {
        std::unique_lock lock(queue_mu_);
        queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;  // stopping
        sub = std::move(queue_.front());
        queue_.pop_front();
        ++busy_;
      }
      process(sub);
      {
        std::lock_guard lock(queue_mu_);
        --busy_;
      }
      drain_cv_.notify_all();
    }
  }

  AnalysisStatus current_status(const std::string& id) {
    return statuses_.get(id)->get<AnalysisStatus>();
  }

  void set_state(const std::string& id, State to,
                 std::optional<std::string> reason = std::nullopt) {
    std::lock_guard lock(status_mu_);
    AnalysisStatus st = current_status(id);
    if (!legal_transition(st.state, to))
      fail(ErrorKind::conflict, std::string("illegal transition ") + to_string(st.state) +
                                    " -> " + to_string(to));
    st.state = to;
    st.failure_reason =
        to == State::failed
            ? std::optional<std::string>(reason.value_or("unknown failure"))
            : std::nullopt;
    st.history.push_back(to_string(to));
    statuses_.put(id, st);
  }

  void set_sample_sha(const std::string& id, const std::string& sha256) {
    std::lock_guard lock(status_mu_);
    AnalysisStatus st = current_status(id);
    st.sample_sha256 = sha256;
    statuses_.put(id, st);
  }

  // Drives the record to failed through whatever states are still missing.
  void mark_failed(const std::string& id, const std::string& reason) {
    AnalysisStatus st = current_status(id);
    if (st.state == State::done || st.state == State::failed) return;
    if (st.state == State::queued) set_state(id, State::parsing);
    if (current_status(id).state == State::executing) set_state(id, State::analyzing);
    set_state(id, State::failed, reason);
  }

  void process(const Submission& sub) {
    try {
      set_state(sub.id, State::parsing);
      run_stages(sub);
    } catch (const std::exception& e) {
      mark_failed(sub.id, e.what());
    }
  }

  size_t resubmit_urls(const std::vector<std::string>& urls, const Submission& parent) {
    size_t accepted = 0;
    if (parent.depth >= opt_.thresholds.resubmission_depth_cap) return accepted;
    for (const auto& url : urls) {
      try {
        submit(PayloadKind::url, url, parent.exec_duration, parent.exec_argument,
               parent.source, false, parent.depth + 1);
        ++accepted;
      } catch (const Error&) {
        // unparseable extraction artifact; the rest still go through
      }
    }
    return accepted;
  }

  void run_stages(const Submission& sub) {
    const Thresholds& th = opt_.thresholds;

    // parsing: reduce the payload to binary bytes
    Bytes binary;
    std::vector<std::string> md_urls;
    std::optional<Url> source_url;
    std::string filename_hint;
    if (sub.payload_kind == PayloadKind::url) {
      source_url = parse_url(sub.payload);
      filename_hint = source_url->basename();
      auto fetched = fetcher_->fetch(sub.payload);
      md_urls.push_back(sub.payload);
      if (fetched.final_url != sub.payload) md_urls.push_back(fetched.final_url);
      if (fetched.kind == parsers::ContentKind::shell_script) {
        std::string text(fetched.body.begin(), fetched.body.end());
        auto script = parsers::parse_shell_script(text, th);
        size_t n = resubmit_urls(parsers::extract_url_strings(script), sub);
        fail(ErrorKind::invalid_input,
             "payload is a dropper script; " + std::to_string(n) + " URLs resubmitted");
      }
      binary = std::move(fetched.body);
    } else if (sub.payload_kind == PayloadKind::elf_bytes) {
      binary.assign(sub.payload.begin(), sub.payload.end());
    } else {
      binary = parsers::assemble_hex_script(sub.payload);
    }

    const std::string sha = sha256_hex(binary);
    set_sample_sha(sub.id, sha);

    if (!sub.force && reports_.by_hash(sha)) {
      set_state(sub.id, State::done);  // identical bytes, report already on file
      return;
    }

    elf::ElfImage img = elf::parse_elf(binary, filename_hint);
    if (!img.valid) fail(ErrorKind::invalid_input, "not an ELF binary: " + img.error);
    auto static_report = static_analysis::analyze_static(img, th, opt_.rulesets);

    // executing
    set_state(sub.id, State::executing);
    report::ReportFragments frags;
    frags.sample.sha256 = sha;
    frags.sample.size = binary.size();
    frags.sample.cpu_arch = elf::to_string(img.cpu_arch);
    frags.sample.arm_version = img.arm_version_hint;
    frags.static_report = static_report;
    frags.md_urls = md_urls;
    frags.created_at = now_iso();

    std::optional<std::string> dropper_url;
    try {
      sandbox::VmProfile profile = sandbox::select_profile(img);
      int duration = sub.exec_duration.value_or(th.default_exec_duration_sec);
      auto result = sandbox::execute_with_fallback(
          sha, profile, duration, sub.exec_argument.value_or(""), *executor_, th);
      frags.execution.profile_used = result.profile_used.name();
      if (result.ok) {
        auto parsed = trace::parse_trace(result.trace_text);
        frags.behavior = trace::analyze_behavior(parsed.events, opt_.rulesets);
        frags.network = pcap::analyze_capture(result.capture_bytes, th, opt_.rulesets);
        frags.execution.outcome = "ok";
        dropper_url = sandbox::detect_dropper(*frags.behavior, *frags.network);
        if (dropper_url) frags.md_urls.push_back(*dropper_url);
      }
    } catch (const Error&) {
      // no runnable profile or a sandbox fault; the report stays static-only
    }

    // analyzing
    set_state(sub.id, State::analyzing);
    if (auto scan = av_->scan(sha))
      frags.family = classify::classify_family(*scan, opt_.rulesets.generic_labels);
    auto final_report = report::merge_report(frags);
    reports_.save(final_report);

    if (source_url) {
      auto facts = classify::make_facts(sha, *source_url, static_report,
                                        frags.network.value_or(pcap::NetworkReport{}));
      facts_.put(sha, nlohmann::json(facts));
    }

    if (!final_report.md_urls.empty())
      report::report_blacklist(final_report.md_urls, *abuse_, blacklist_, sha,
                               now_iso());

    recluster();

    if (dropper_url && sub.depth < th.resubmission_depth_cap) {
      try {
        submit(PayloadKind::url, *dropper_url, sub.exec_duration, sub.exec_argument,
               Source::dropper_resubmission, false, sub.depth + 1);
      } catch (const Error&) {
        // a hostile Host header is not a reason to fail this sample
      }
    }

    set_state(sub.id, State::done);
  }

  // Recomputes clusters over all known facts and pins botnet ids on reports.
  void recluster() {
    std::lock_guard lock(recluster_mu_);
    auto clustering = clusters();
    for (const auto& botnet : clustering.botnets)
      for (const auto& instance : botnet.instances)
        for (const auto& sha : instance.samples) {
          auto rep = reports_.by_hash(sha);
          if (rep && rep->botnet_id != botnet.botnet_id) {
            rep->botnet_id = botnet.botnet_id;
            reports_.save(*rep);
          }
        }
  }

  PipelineOptions opt_;
  std::shared_ptr<sandbox::Executor> executor_;
  std::shared_ptr<classify::AvClient> av_;
  std::shared_ptr<report::AbuseClient> abuse_;
  std::shared_ptr<UrlFetcher> fetcher_;

  JsonlStore submissions_;
  JsonlStore statuses_;
  JsonlStore facts_;
  report::ReportStore reports_;
  report::BlacklistStore blacklist_;

  mutable std::mutex submit_mu_;
  mutable std::mutex status_mu_;
  mutable std::mutex recluster_mu_;
  unsigned long counter_ = 0;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable drain_cv_;
  std::deque<Submission> queue_;
  size_t busy_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace trapline::service
