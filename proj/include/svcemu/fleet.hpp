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

#ifndef SVCEMU_FLEET_HPP_
#define SVCEMU_FLEET_HPP_

#include <chrono>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "svcemu/config.hpp"
#include "svcemu/engine.hpp"
#include "svcemu/network.hpp"

namespace svcemu {

/// Reads a protocol description: the built-in LDAP model for "ldap",
/// otherwise the DSL file at `path`. Throws SpecError or ConfigError.
ProtocolSpec load_protocol(const std::string& path);

/// Identifier of endpoint `index`, e.g. "ldap-0007".
std::string endpoint_name(std::size_t index);

/// Engine models plus their socket bindings, built from a config. Endpoint i
/// is seeded with seed_store(base_dn, seed_users, i).
class Fleet {
 public:
  explicit Fleet(const FleetConfig& config);
  ~Fleet();

  Engine& engine() noexcept { return *engine_; }
  const Engine& engine() const noexcept { return *engine_; }
  const FleetConfig& config() const noexcept { return config_; }
  const ProtocolSpec& protocol() const noexcept { return *protocol_; }
  const std::vector<net::NativeBinding>& bindings() const noexcept { return bindings_; }

  /// Binds every listener (all-or-nothing). Throws net::NetworkError.
  void start();
  void stop();
  net::Server* server() noexcept { return server_.get(); }

 private:
  FleetConfig config_;
  std::shared_ptr<const ProtocolSpec> protocol_;
  std::unique_ptr<Engine> engine_;
  std::vector<net::NativeBinding> bindings_;
  std::unique_ptr<net::Server> server_;
};

/// One JSON object, no trailing newline.
std::string stats_line(const StatsSnapshot& s, double t_seconds, const char* event = nullptr);

enum ExitCode : int { kExitClean = 0, kExitConfig = 1, kExitStartup = 2 };

/// Blocks up to the given duration; returns true once shutdown is requested.
using ShutdownWait = std::function<bool(std::chrono::milliseconds)>;

/// Builds and starts the fleet, prints a ready line, a stats line every
/// stats_interval_ms and a final stats line on shutdown. Errors go to `err`.
int run_fleet(const FleetConfig& config, std::ostream& out, std::ostream& err, const ShutdownWait& wait);

}  // namespace svcemu

#endif  // SVCEMU_FLEET_HPP_
