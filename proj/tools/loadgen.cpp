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

// loadgen run --host H --base-port P --endpoints N --threads T
//             [--seed-users 100] [--csv out.csv] [--timeout-ms 60000]
// loadgen probe --host H --port P

#include <signal.h>

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "svcemu/loadgen.hpp"

int main(int argc, char** argv) {
  namespace lg = svcemu::loadgen;
  ::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"LDAP workload driver and conformance probe"};
  app.require_subcommand(1);

  lg::WorkloadSpec spec;
  std::string host = "127.0.0.1";
  int base_port = 20000;
  std::size_t endpoints = 1;
  std::string csv;
  std::int64_t timeout_ms = 60000;

  auto* run = app.add_subcommand("run", "Drive the nine-step workload against N endpoints");
  run->add_option("--host", host, "Emulator host")->capture_default_str();
  run->add_option("--base-port", base_port, "Port of endpoint 0")->required();
  run->add_option("--endpoints", endpoints, "Number of endpoints")->required()->check(CLI::PositiveNumber);
  run->add_option("--threads", spec.threads, "Concurrent worker threads")->required()->check(CLI::PositiveNumber);
  run->add_option("--seed-users", spec.expected_seed_users, "Users seeded per endpoint")->capture_default_str();
  run->add_option("--csv", csv, "Write per-endpoint CSV here");
  run->add_option("--timeout-ms", timeout_ms, "Per-request timeout")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--base-dn", spec.base_dn, "Directory suffix")->capture_default_str();
  run->add_option("--bind-dn", spec.bind_dn, "Bind DN")->capture_default_str();
  run->add_option("--bind-password", spec.bind_password, "Bind password")->capture_default_str();

  std::string probe_host = "127.0.0.1";
  int probe_port = 20000;
  auto* probe = app.add_subcommand("probe", "Send out-of-protocol sequences and report the server's reaction");
  probe->add_option("--host", probe_host, "Emulator host")->capture_default_str();
  probe->add_option("--port", probe_port, "Endpoint port")->required();
  std::int64_t probe_timeout_ms = 5000;
  probe->add_option("--timeout-ms", probe_timeout_ms, "Per-case timeout")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    if (base_port < 1 || base_port + static_cast<long long>(endpoints) - 1 > 65535) {
      std::cerr << "error: port range " << base_port << "+" << endpoints << " exceeds 65535\n";
      return 2;
    }
    spec.targets = lg::port_range_targets(host, base_port, endpoints);
    spec.timeout = std::chrono::milliseconds(timeout_ms);
    const auto reports = lg::run_workload(spec);
    const auto agg = lg::aggregate(reports);
    if (!csv.empty()) {
      try {
        lg::emit_csv(reports, csv);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
    for (const auto& r : reports)
      if (!r.pass) std::cerr << "endpoint " << r.endpoint << ": " << r.verdict() << "\n";
    std::printf("endpoints=%zu pass=%zu fail=%zu msgs_sent=%zu msgs_received=%zu median_ms=%.3f mean_ms=%.3f max_ms=%.3f\n",
                agg.endpoints, agg.passed, agg.endpoints - agg.passed, agg.msgs_sent, agg.msgs_received,
                agg.median_total_ms, agg.mean_total_ms, agg.max_total_ms);
    return agg.all_pass() ? 0 : 1;
  }

  const auto report = lg::conformance_probe(probe_host, static_cast<std::uint16_t>(probe_port),
                                            std::chrono::milliseconds(probe_timeout_ms));
  lg::write_probe_report(report, std::cout);
  return report.all_ok() ? 0 : 1;
}
