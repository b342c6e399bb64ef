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

// Workload driver. Each endpoint gets the nine-step conversation:
//   1 connect            4 add uid=lg-<i>       7 verify search (single level
//   2 bind               5 subtree search at       under ou=people, equality
//   3 whole-directory      the new entry           on the new password)
//     search             6 modify userPassword  8 delete    9 unbind
// Requests on one connection are strictly synchronous.

#ifndef SVCEMU_LOADGEN_HPP_
#define SVCEMU_LOADGEN_HPP_

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace svcemu::loadgen {

inline constexpr std::size_t kSteps = 9;

struct Target {
  std::size_t index = 0;
  std::string host;
  std::uint16_t port = 0;
};

struct WorkloadSpec {
  std::vector<Target> targets;
  std::size_t threads = 1;
  std::chrono::milliseconds timeout{60000};
  int expected_seed_users = 100;
  std::string base_dn = "o=acme";
  std::string people_ou = "people";
  std::string bind_dn = "cn=admin,o=acme";
  std::string bind_password = "secret";
};

/// Targets host:base_port .. host:base_port+n-1, indexed from 0.
std::vector<Target> port_range_targets(const std::string& host, int base_port, std::size_t n);

/// Thread that owns target position `i` under round-robin partitioning.
inline std::size_t owner_thread(std::size_t i, std::size_t threads) { return i % threads; }

struct EndpointReport {
  std::size_t endpoint = 0;
  bool pass = false;
  int failed_step = 0;  // 1..9 when !pass
  std::string reason;
  std::array<std::optional<double>, kSteps> step_ms{};
  std::size_t msgs_sent = 0;
  std::size_t msgs_received = 0;
  double total_ms = 0.0;

  /// "pass" or "fail:step<N>:<reason>".
  std::string verdict() const;
};

struct Aggregate {
  std::size_t endpoints = 0;
  std::size_t passed = 0;
  double median_total_ms = 0.0;
  double mean_total_ms = 0.0;
  double max_total_ms = 0.0;
  std::size_t msgs_sent = 0;
  std::size_t msgs_received = 0;

  bool all_pass() const noexcept { return passed == endpoints; }
};

Aggregate aggregate(const std::vector<EndpointReport>& reports);

/// Runs one endpoint's conversation.
EndpointReport run_endpoint(const WorkloadSpec& spec, const Target& target);

/// Reports come back sorted by endpoint index.
std::vector<EndpointReport> run_workload(const WorkloadSpec& spec);

/// Message count of one passing conversation against a seed of
/// `seed_users` users: requests plus responses.
std::size_t expected_messages(int seed_users);

void write_csv(const std::vector<EndpointReport>& reports, std::ostream& out);
/// Throws std::runtime_error when the path cannot be written.
void emit_csv(const std::vector<EndpointReport>& reports, const std::filesystem::path& path);

struct ProbeCase {
  std::string name;
  bool expect_reject = true;
  bool rejected = false;
  std::string detail;
  bool ok() const noexcept { return rejected == expect_reject; }
};

struct ProbeReport {
  std::vector<ProbeCase> cases;
  bool all_ok() const;
};

/// Sends deliberately out-of-protocol sequences plus a control conversation
/// and records how the server reacted.
ProbeReport conformance_probe(const std::string& host, std::uint16_t port,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(5000),
                              const std::string& bind_dn = "cn=admin,o=acme",
                              const std::string& bind_password = "secret");

void write_probe_report(const ProbeReport& r, std::ostream& out);

}  // namespace svcemu::loadgen

#endif  // SVCEMU_LOADGEN_HPP_
