// Copyright 2026 The svcemu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// non-zero when any hard criterion fails. `--extended` adds the
// 10,000-endpoint scale run.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "support/generators.hpp"
#include "svcemu/fleet.hpp"
#include "svcemu/ldap_codec.hpp"
#include "svcemu/loadgen.hpp"

namespace {

using namespace svcemu;
using Clock = std::chrono::steady_clock;
using json = nlohmann::json;
namespace fs = std::filesystem;
namespace lg = svcemu::loadgen;

constexpr int kSeedUsers = 100;
constexpr double kRssBudgetMb = 130.0;
constexpr double kStartupBudgetS = 30.0;
constexpr double kLatencyRatio = 2.0;
constexpr std::size_t kMsgLo = 110, kMsgHi = 140;
constexpr double kMaxDelayMs = 2000.0;
constexpr double kDelaySlackMs = 500.0;

struct Line {
  std::string label;
  bool pass = false;
  bool soft = false;
  std::string detail;
};

std::vector<Line> g_lines;

void record(const std::string& label, bool pass, const std::string& detail, bool soft = false) {
  g_lines.push_back({label, pass, soft, detail});
}

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("svcemu_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---------------------------------------------------------------------------
// Child processes

class EmulatorProcess {
 public:
  explicit EmulatorProcess(const std::vector<std::string>& args) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    start_ = Clock::now();
    pid_ = ::fork();
    if (pid_ < 0) throw std::runtime_error("fork failed");
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      std::vector<char*> argv;
      std::string exe = SVCEMU_EMULATOR_BIN;
      argv.push_back(exe.data());
      std::vector<std::string> copy = args;
      for (auto& a : copy) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(exe.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
    reader_ = std::thread([this] { read_loop(); });
  }

  ~EmulatorProcess() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    if (reader_.joinable()) reader_.join();
    ::close(fd_);
  }

  pid_t pid() const { return pid_; }
  Clock::time_point started() const { return start_; }

  /// First stdout line whose "event" equals `event`, as parsed JSON.
  std::optional<json> wait_event(const std::string& event, std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    const auto deadline = Clock::now() + timeout;
    std::size_t seen = 0;
    for (;;) {
      for (; seen < lines_.size(); ++seen) {
        auto j = json::parse(lines_[seen], nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.value("event", "") == event) return j;
      }
      if (eof_) return std::nullopt;
      if (cv_.wait_until(lk, deadline) == std::cv_status::timeout && seen == lines_.size()) return std::nullopt;
    }
  }

  /// SIGINT, then the final stats line; reaps the child.
  std::optional<json> stop() {
    if (pid_ <= 0) return std::nullopt;
    ::kill(pid_, SIGINT);
    auto final_line = wait_event("final", std::chrono::seconds(30));
    ::waitpid(pid_, &status_, 0);
    pid_ = -1;
    return final_line;
  }

  int exit_status() const { return WIFEXITED(status_) ? WEXITSTATUS(status_) : -1; }

 private:
  void read_loop() {
    std::string buf;
    char chunk[4096];
    for (;;) {
      const auto n = ::read(fd_, chunk, sizeof chunk);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        std::lock_guard lk(mu_);
        lines_.push_back(buf.substr(0, nl));
        buf.erase(0, nl + 1);
        cv_.notify_all();
      }
    }
    std::lock_guard lk(mu_);
    eof_ = true;
    cv_.notify_all();
  }

  pid_t pid_ = -1;
  int fd_ = -1;
  int status_ = 0;
  Clock::time_point start_;
  std::thread reader_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  bool eof_ = false;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* p = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int st = ::pclose(p);
  r.exit_code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string last_line(const std::string& s) {
  auto t = s;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  const auto nl = t.rfind('\n');
  return nl == std::string::npos ? t : t.substr(nl + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string l; std::getline(in, l);) rows.push_back(split_csv(l));
  return rows;
}

std::string loadgen_run_cmd(int base_port, std::size_t endpoints, int threads, const fs::path& csv,
                            int timeout_ms = 60000) {
  return std::string(SVCEMU_LOADGEN_BIN) + " run --host 127.0.0.1 --base-port " + std::to_string(base_port) +
         " --endpoints " + std::to_string(endpoints) + " --threads " + std::to_string(threads) +
         " --seed-users " + std::to_string(kSeedUsers) + " --timeout-ms " + std::to_string(timeout_ms) + " --csv " +
         csv.string();
}

std::optional<double> vm_rss_mb(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  for (std::string l; std::getline(in, l);)
    if (l.rfind("VmRSS:", 0) == 0) return std::stod(l.substr(6)) / 1024.0;
  return std::nullopt;
}

FleetConfig fleet_config(std::size_t n, int base_port) {
  FleetConfig c;
  c.endpoint_count = n;
  c.base_port = base_port;
  c.seed_users = kSeedUsers;
  c.stats_interval_ms = 0;
  return c;
}

lg::WorkloadSpec workload(std::size_t n, int base_port, std::size_t threads, int timeout_ms = 60000) {
  lg::WorkloadSpec s;
  s.targets = lg::port_range_targets("127.0.0.1", base_port, n);
  s.threads = threads;
  s.timeout = std::chrono::milliseconds(timeout_ms);
  s.expected_seed_users = kSeedUsers;
  return s;
}

// ---------------------------------------------------------------------------
// Message-count oracle. Replays the nine-step workload against a freshly
// seeded store using plain DN-suffix string matching, independent of the
// store's own scope evaluation and of the wire layer.

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t oracle_messages(int seed_users) {
  const auto store = directory::seed_store(directory::DistinguishedName::parse("o=acme"), seed_users, 0);
  std::vector<std::string> dns;
  for (const auto& [key, e] : store.entries()) dns.push_back(lower(e->dn().str()));
  auto under = [&](const std::string& base) {
    std::size_t n = 0;
    for (const auto& d : dns)
      if (d == base || (d.size() > base.size() && d.compare(d.size() - base.size() - 1, std::string::npos,
                                                            "," + base) == 0))
        ++n;
    return n;
  };
  const std::string people = "ou=people,o=acme";
  const std::string added = "uid=lg-0," + people;

  std::size_t requests = 0, responses = 0;
  requests += 1, responses += 1;                       // bind
  requests += 1, responses += under("o=acme") + 1;     // whole directory + done
  requests += 1, responses += 1;                       // add
  dns.push_back(added);
  requests += 1, responses += under(added) + 1;        // subtree at the new entry + done
  requests += 1, responses += 1;                       // modify
  requests += 1, responses += 1 + 1;                   // only the modified entry carries the new password
  requests += 1, responses += 1;                       // delete
  requests += 1;                                       // unbind has no response
  return requests + responses;
}

// ---------------------------------------------------------------------------
// Criteria

struct ProcessCounts {
  bool measured = false;
  std::uint64_t engine_total = 0;
  std::size_t endpoints = 0;
  bool csv_rows_match = false;
};

ProcessCounts scale_and_memory(std::size_t n, int base_port, bool with_memory, const std::string& label) {
  ProcessCounts counts;
  EmulatorProcess emu({"serve", "--endpoints", std::to_string(n), "--base-port", std::to_string(base_port)});
  const auto ready = emu.wait_event("ready", std::chrono::seconds(120));
  const double startup_s = seconds_since(emu.started());
  if (!ready) {
    record(label, false, "emulator did not report ready within 120 s");
    if (with_memory) record("3", false, "no emulator to measure", true);
    return counts;
  }
  std::optional<double> rss;
  if (with_memory) {
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    rss = vm_rss_mb(emu.pid());
  }
  const auto csv = scratch_dir() / ("scale_" + std::to_string(n) + ".csv");
  const auto t0 = Clock::now();
  const auto r = run_command(loadgen_run_cmd(base_port, n, 32, csv));
  const double run_s = seconds_since(t0);
  const auto rows = read_csv(csv);
  std::size_t passed = 0;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) passed += rows[i].size() > 1 && rows[i][1] == "pass";
  const auto final_line = emu.stop();
  const bool ok = startup_s < kStartupBudgetS && r.exit_code == 0 && passed == n && rows.size() == n + 2;
  record(label, ok,
         std::to_string(n) + " endpoints ready in " + fmt("%.2f", startup_s) + " s (budget " +
             fmt("%.0f", kStartupBudgetS) + " s); loadgen --threads 32: " + std::to_string(passed) + "/" +
             std::to_string(n) + " pass in " + fmt("%.1f", run_s) + " s, exit " + std::to_string(r.exit_code));
  if (with_memory)
    record("3", rss && *rss <= kRssBudgetMb,
           "idle VmRSS " + (rss ? fmt("%.1f", *rss) : std::string("?")) + " MB for " + std::to_string(n) +
               " seeded endpoints (budget " + fmt("%.0f", kRssBudgetMb) + " MB)",
           true);

  const std::size_t oracle = oracle_messages(kSeedUsers);
  counts.measured = final_line.has_value();
  counts.endpoints = n;
  counts.engine_total = final_line ? final_line->value("msgs_in", 0ull) + final_line->value("msgs_out", 0ull) : 0;
  counts.csv_rows_match = rows.size() == n + 2;
  for (std::size_t i = 1; counts.csv_rows_match && i + 1 < rows.size(); ++i)
    counts.csv_rows_match = rows[i].size() == 14 && std::stoull(rows[i][11]) + std::stoull(rows[i][12]) == oracle;
  return counts;
}

void latency_shape() {
  auto per_endpoint_median = [](std::size_t n, int base_port, int repeats) {
    Fleet f(fleet_config(n, base_port));
    f.start();
    auto spec = workload(n, base_port, 1);
    lg::run_endpoint(spec, spec.targets[0]);  // warm-up
    std::vector<double> totals;
    for (int k = 0; k < repeats; ++k)
      for (const auto& r : lg::run_workload(spec)) totals.push_back(r.pass ? r.total_ms : 1e9);
    return median(totals);
  };
  const double m1 = per_endpoint_median(1, 24200, 25);
  const double m100 = per_endpoint_median(100, 24000, 3);
  const double m1000 = per_endpoint_median(1000, 23000, 1);
  auto within = [&](double m) { return m <= kLatencyRatio * m1 && m >= m1 / kLatencyRatio; };
  record("2", m1 > 0 && within(m100) && within(m1000),
         "median per-endpoint workload ms at 1/100/1000 endpoints: " + fmt("%.3f", m1) + " / " + fmt("%.3f", m100) +
             " / " + fmt("%.3f", m1000) + " (ratios " + fmt("%.2f", m100 / m1) + ", " + fmt("%.2f", m1000 / m1) +
             "; bound " + fmt("%.1f", kLatencyRatio) + "x)");
}

void message_count(const ProcessCounts& spawned) {
  const std::size_t n = 100;
  const std::size_t oracle = oracle_messages(kSeedUsers);
  Fleet f(fleet_config(n, 24300));
  f.start();
  bool all_equal = true;
  std::string first_mismatch;
  for (int run = 0; run < 2; ++run) {
    const auto before = f.engine().stats();
    const auto reports = lg::run_workload(workload(n, 24300, 8));
    const auto after = f.engine().stats();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = before.endpoints[i];
      const auto& a = after.endpoints[i];
      const std::uint64_t engine_in = a.msgs_in - b.msgs_in, engine_out = a.msgs_out - b.msgs_out;
      const auto& r = reports[i];
      const bool eq = r.pass && engine_in == r.msgs_sent && engine_out == r.msgs_received &&
                      engine_in + engine_out == oracle;
      if (!eq && all_equal)
        first_mismatch = "endpoint " + std::to_string(i) + " run " + std::to_string(run) + ": engine " +
                         std::to_string(engine_in) + "+" + std::to_string(engine_out) + ", loadgen " +
                         std::to_string(r.msgs_sent) + "+" + std::to_string(r.msgs_received);
      all_equal = all_equal && eq;
    }
  }
  const bool bracket = oracle >= kMsgLo && oracle <= kMsgHi;
  const bool spawned_ok =
      spawned.measured && spawned.csv_rows_match && spawned.engine_total == spawned.endpoints * oracle;
  record("4", all_equal && bracket && spawned_ok && lg::expected_messages(kSeedUsers) == oracle,
         "oracle " + std::to_string(oracle) + " messages per endpoint (bracket [" + std::to_string(kMsgLo) + ", " +
             std::to_string(kMsgHi) + "]); engine stats == loadgen count == oracle for " + std::to_string(n) +
             " endpoints x 2 runs" + (all_equal ? "" : "; mismatch: " + first_mismatch) +
             "; spawned emulator total " + std::to_string(spawned.engine_total) + " for " +
             std::to_string(spawned.endpoints) + " endpoints, CSV rows " +
             (spawned.csv_rows_match ? "match" : "DO NOT match"));
}

// First events derived from the enumerated trace set versus the stepper's
// enabled sets along every prefix.
bool spec_matches_traces(const ProtocolSpec& spec, std::size_t depth, std::string& why) {
  const auto traces = enumerate_traces(spec, depth);
  struct Node {
    Trace trace;
    std::vector<ProtocolTerm> states;
  };
  std::vector<Node> frontier{{{}, {spec.root()}}};
  for (std::size_t d = 0; d < depth; ++d) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      std::set<Event> enabled;
      for (const auto& q : node.states)
        for (const auto& e : enabled_events(spec, q)) enabled.insert(e);
      for (const auto& e : spec.alphabet()) {
        Trace t = node.trace;
        t.push_back(e);
        const bool in_traces = traces.count(t) == 1;
        if (in_traces != (enabled.count(e) == 1)) {
          why = "event " + to_string(e) + " after " + std::to_string(node.trace.size()) + " events";
          return false;
        }
        if (!in_traces) continue;
        std::map<std::string, ProtocolTerm> succ;
        for (const auto& q : node.states) {
          const bool progressed = step(spec, q, e).kind != StepOutcome::Kind::NoTransition;
          const auto all = successors(spec, q, e);
          if (progressed != !all.empty()) {
            why = "step and successors disagree on " + to_string(e);
            return false;
          }
          for (const auto& tr : all) succ.emplace(to_string(tr.next), tr.next);
        }
        Node n{t, {}};
        for (auto& [k, v] : succ) n.states.push_back(v);
        next.push_back(std::move(n));
      }
    }
    frontier = std::move(next);
  }
  return true;
}

bool ldap_contraction_holds(std::size_t depth, std::size_t& checked) {
  const auto spec = build_ldap_protocol();
  const auto traces = enumerate_traces(spec, depth);
  auto completes = [](const std::string& n) -> std::string {
    if (n == "SearchEntry" || n == "SearchDone") return "SearchRq";
    if (n == "ModRes") return "ModRq";
    if (n == "AddRes") return "AddRq";
    if (n == "DelRes") return "DelRq";
    return "";
  };
  checked = traces.size();
  for (const auto& trace : traces) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& n = trace[i].shape.name();
      if (trace[i].direction != Direction::Receive || (n != "BindRq" && n != "UnbindRq")) continue;
      std::map<std::string, int> opened_after;
      for (std::size_t j = i + 1; j < trace.size(); ++j) {
        const Event& e = trace[j];
        if (e.direction == Direction::Receive) {
          opened_after[e.shape.name()]++;
          continue;
        }
        const std::string op = completes(e.shape.name());
        if (op.empty()) continue;
        if (opened_after[op] <= 0) return false;
        if (e.shape.name() != "SearchEntry") opened_after[op]--;
      }
    }
  }
  return true;
}

void protocol_semantics() {
  testgen::Rng rng(20260101);
  std::size_t agree = 0;
  std::string why;
  for (int i = 0; i < 500; ++i) {
    const auto gen = testgen::SpecGenerator(rng, 6).generate();
    const ProtocolSpec spec(gen.decls, gen.root);
    std::string w;
    if (spec_matches_traces(spec, 4, w)) {
      ++agree;
    } else if (why.empty()) {
      why = "spec " + std::to_string(i) + ": " + w;
    }
  }
  std::size_t traces = 0;
  const bool contraction = ldap_contraction_holds(6, traces);
  record("5", agree == 500 && contraction,
         std::to_string(agree) + "/500 random specs agree with trace enumeration to depth 4; LDAP contraction " +
             (contraction ? "holds" : "VIOLATED") + " over " + std::to_string(traces) + " traces to depth 6" +
             (why.empty() ? "" : "; first disagreement " + why));
}

void codec_and_interop() {
  testgen::Rng rng(6);
  std::size_t roundtrip_ok = 0;
  for (int i = 0; i < 10000; ++i) {
    const Message m = testgen::random_ldap_message(rng);
    try {
      const auto frame = ldap::encode(m);
      if (ldap::decode(frame) == m && ldap::encode(ldap::decode(frame)) == frame) ++roundtrip_ok;
    } catch (const std::exception&) {
    }
  }
  std::size_t fuzz_ok = 0, rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    ber::Bytes b;
    if (i % 2) {
      const std::string s = testgen::random_bytes(rng, 96);
      b.assign(s.begin(), s.end());
    } else {
      b = ldap::encode(testgen::random_ldap_message(rng)).bytes;
      for (int k = testgen::uniform(rng, 1, 4); k > 0; --k)
        b[static_cast<std::size_t>(testgen::uniform(rng, 0, static_cast<int>(b.size()) - 1))] =
            static_cast<std::uint8_t>(testgen::uniform(rng, 0, 255));
    }
    try {
      ldap::decode(ber::ByteView(b));
      ++fuzz_ok;
    } catch (const ldap::CodecError&) {
      ++fuzz_ok;
      ++rejected;
    } catch (...) {
    }
  }
  Fleet f(fleet_config(1, 24500));
  f.start();
  const auto r = run_command("python3 " SVCEMU_SOURCE_DIR "/tests/interop/ldap3_smoke.py 127.0.0.1 24500 " +
                             std::to_string(kSeedUsers));
  const bool interop = r.exit_code == 0;
  record("6", roundtrip_ok == 10000 && fuzz_ok == 100000 && interop,
         std::to_string(roundtrip_ok) + "/10000 round trips; " + std::to_string(fuzz_ok) +
             "/100000 fuzz inputs handled without crash (" + std::to_string(rejected) +
             " rejected with a codec error); ldap3 client session " +
             (interop ? "all success codes" : "FAILED: " + last_line(r.output)));
}

void conformance_probe() {
  EmulatorProcess emu({"serve", "--endpoints", "1", "--base-port", "24510"});
  if (!emu.wait_event("ready", std::chrono::seconds(30))) {
    record("7", false, "emulator did not start");
    return;
  }
  const auto r = run_command(std::string(SVCEMU_LOADGEN_BIN) + " probe --host 127.0.0.1 --port 24510");
  std::size_t ok_lines = 0, fail_lines = 0;
  std::istringstream in(r.output);
  for (std::string l; std::getline(in, l);) {
    ok_lines += l.rfind("ok", 0) == 0;
    fail_lines += l.rfind("FAIL", 0) == 0;
  }
  emu.stop();
  record("7", r.exit_code == 0 && ok_lines == 3 && fail_lines == 0,
         "loadgen probe: " + std::to_string(ok_lines) + " findings as expected (control accepted, 2 injected " +
             "sequences rejected), " + std::to_string(fail_lines) + " unexpected, exit " +
             std::to_string(r.exit_code));
}

void fault_injection() {
  double max_step = 0.0;
  bool delay_pass = true;
  {
    auto c = fleet_config(4, 24520);
    c.faults.max_delay_ms = static_cast<std::int64_t>(kMaxDelayMs);
    c.faults.seed = 8;
    Fleet f(c);
    f.start();
    for (const auto& r : lg::run_workload(workload(4, 24520, 4, 10000))) {
      delay_pass = delay_pass && r.pass;
      for (const auto& s : r.step_ms)
        if (s) max_step = std::max(max_step, *s);
    }
  }
  const bool delay_ok = delay_pass && max_step > kMaxDelayMs / 2 && max_step <= kMaxDelayMs + kDelaySlackMs;

  bool drop_ok = true;
  std::string drop_detail;
  {
    auto c = fleet_config(4, 24530);
    c.faults.drop_probability = 1.0;
    c.fault_endpoints = std::set<std::size_t>{0, 1};
    Fleet f(c);
    f.start();
    const auto reports = lg::run_workload(workload(4, 24530, 4, 1000));
    for (std::size_t i = 0; i < 4; ++i) {
      const std::string want = i < 2 ? "fail:step2:timeout" : "pass";
      if (reports[i].verdict() != want) drop_ok = false;
      drop_detail += (i ? ", " : "") + reports[i].verdict();
    }
    auto again = workload(4, 24530, 2, 5000);
    again.targets.erase(again.targets.begin(), again.targets.begin() + 2);
    for (const auto& r : lg::run_workload(again)) drop_ok = drop_ok && r.pass;
    const auto stats = f.engine().stats();
    for (const auto& e : stats.endpoints) drop_ok = drop_ok && !e.halted;
    drop_ok = drop_ok && stats.violations == 0;
  }
  record("8", delay_ok && drop_ok,
         "max-delay " + fmt("%.0f", kMaxDelayMs) + " ms: all pass " + (delay_pass ? "yes" : "no") +
             ", largest step " + fmt("%.0f", max_step) + " ms (window (" + fmt("%.0f", kMaxDelayMs / 2) + ", " +
             fmt("%.0f", kMaxDelayMs + kDelaySlackMs) + "]); drop=1.0 on endpoints 0,1: " + drop_detail +
             "; unaffected endpoints re-run " + (drop_ok ? "pass" : "FAIL"));
}

std::string outcome_columns(const fs::path& csv) {
  std::string out;
  for (const auto& row : read_csv(csv)) {
    if (row.size() != 14) return "malformed";
    out += row[0] + ',' + row[1] + ',' + row[11] + ',' + row[12] + '\n';
  }
  return out;
}

void determinism() {
  std::vector<std::string> outcomes;
  std::size_t passed = 0;
  for (int run = 0; run < 2; ++run) {
    EmulatorProcess emu({"serve", "--endpoints", "100", "--base-port", "24600"});
    if (!emu.wait_event("ready", std::chrono::seconds(30))) {
      record("9", false, "emulator did not start");
      return;
    }
    const auto csv = scratch_dir() / ("determinism_" + std::to_string(run) + ".csv");
    const auto r = run_command(loadgen_run_cmd(24600, 100, 8, csv));
    emu.stop();
    passed += r.exit_code == 0;
    outcomes.push_back(outcome_columns(csv));
  }
  const bool same = outcomes[0] == outcomes[1] && outcomes[0] != "malformed" && !outcomes[0].empty();
  record("9", same && passed == 2,
         std::string("two 100-endpoint runs: verdict and message-count columns ") +
             (same ? "byte-identical" : "DIFFER") + " (" + std::to_string(outcomes[0].size()) + " bytes); " +
             std::to_string(passed) + "/2 runs all-pass");
}

}  // namespace

int main(int argc, char** argv) {
  bool extended = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--extended") == 0) {
      extended = true;
    } else {
      std::fprintf(stderr, "usage: %s [--extended]\n", argv[0]);
      return 2;
    }
  }
  ::signal(SIGPIPE, SIG_IGN);
  const auto t0 = Clock::now();

  const auto spawned = scale_and_memory(1000, 21000, true, "1");
  latency_shape();
  message_count(spawned);
  protocol_semantics();
  codec_and_interop();
  conformance_probe();
  fault_injection();
  determinism();
  if (extended) scale_and_memory(10000, 22000, false, "1x");

  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  std::stable_sort(g_lines.begin(), g_lines.end(), [](const Line& a, const Line& b) { return a.label < b.label; });
  for (const auto& l : g_lines)
    std::printf("%s criterion %s: %s\n", l.pass ? "PASS" : (l.soft ? "FAIL(soft)" : "FAIL"), l.label.c_str(),
                l.detail.c_str());
  const bool hard_ok = std::all_of(g_lines.begin(), g_lines.end(), [](const Line& l) { return l.pass || l.soft; });
  std::printf("acceptance %s in %.1f s\n", hard_ok ? "PASS" : "FAIL", seconds_since(t0));
  return hard_ok ? 0 : 1;
}
