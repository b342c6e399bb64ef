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

#ifndef SVCEMU_CONFIG_HPP_
#define SVCEMU_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "svcemu/engine.hpp"

namespace svcemu {

enum class AddressMode { PortRange, MultiIp };

struct FleetConfig {
  std::size_t endpoint_count = 0;
  int base_port = 20000;
  AddressMode address_mode = AddressMode::PortRange;
  std::vector<std::string> addresses;  // multi-ip mode
  std::string bind_address = "127.0.0.1";
  std::string protocol_file = "ldap";  // "ldap" selects the built-in model
  int seed_users = 100;
  std::string base_dn = "o=acme";
  std::string admin_dn = "cn=admin,o=acme";
  std::string admin_password = "secret";
  bool allow_anonymous = true;
  FaultPolicy faults;
  std::optional<std::set<std::size_t>> fault_endpoints;  // absent: all
  ViolationPolicy violation_policy = ViolationPolicy::Close;
  std::size_t max_frame_size = std::size_t{1} << 20;
  std::int64_t stats_interval_ms = 10000;  // 0 disables periodic lines
  std::int64_t write_timeout_ms = 30000;
  std::size_t outbound_queue_limit = 1024;
  std::size_t io_threads = 0;
  std::size_t expected_peak_connections = 1024;

  /// Throws ConfigError naming the field and the constraint.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Io, Parse, Constraint };
  ConfigError(Kind kind, const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), kind_(kind), line_(line), column_(column) {}
  Kind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

/// Strict JSON schema: unknown keys and mistyped values are errors.
/// Relative protocol_file paths resolve against `base_dir`.
FleetConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
FleetConfig load_config(const std::filesystem::path& path);

/// Parses "max-delay-ms=D,drop=Q,seed=S" (any subset, any order) onto `into`.
void apply_fault_override(std::string_view spec, FaultPolicy& into);

}  // namespace svcemu

#endif  // SVCEMU_CONFIG_HPP_
