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

#include "svcemu/fleet.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace svcemu {

ProtocolSpec load_protocol(const std::string& path) {
  if (path == "ldap") return build_ldap_protocol();
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::Io, "cannot read protocol file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_protocol(ss.str());
}

std::string endpoint_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ldap-%04zu", index);
  return buf;
}

Fleet::Fleet(const FleetConfig& config)
    : config_(config),
      protocol_(std::make_shared<const ProtocolSpec>(load_protocol(config.protocol_file))),
      engine_(std::make_unique<Engine>(config.violation_policy)) {
  config_.validate();
  ldap::BindPolicy policy{config_.admin_dn, config_.admin_password, config_.allow_anonymous};
  auto dispatch = std::make_shared<const DispatchDictionary>(ldap::ldap_dispatch(policy));
  const auto base = directory::DistinguishedName::parse(config_.base_dn);

  bindings_.reserve(config_.endpoint_count);
  for (std::size_t i = 0; i < config_.endpoint_count; ++i) {
    EndpointModel m{endpoint_name(i), protocol_, dispatch,
                    directory::seed_store(base, config_.seed_users, static_cast<int>(i)), FaultPolicy{}};
    if (!config_.fault_endpoints || config_.fault_endpoints->count(i)) m.faults = config_.faults;
    engine_->add_endpoint(std::move(m));

    net::NativeBinding b;
    b.endpoint_id = endpoint_name(i);
    if (config_.address_mode == AddressMode::PortRange) {
      b.address = config_.bind_address;
      b.port = static_cast<std::uint16_t>(config_.base_port + static_cast<int>(i));
    } else {
      b.address = config_.addresses[i];
      b.port = static_cast<std::uint16_t>(config_.base_port);
    }
    bindings_.push_back(std::move(b));
  }
}

Fleet::~Fleet() { stop(); }

void Fleet::start() {
  if (server_) return;
  net::NetworkOptions opts;
  opts.io_threads = config_.io_threads;
  opts.max_frame = config_.max_frame_size;
  opts.write_timeout = std::chrono::milliseconds(config_.write_timeout_ms);
  opts.outbound_queue_limit = config_.outbound_queue_limit;
  opts.expected_peak_connections = config_.expected_peak_connections;
  server_ = net::Server::start(*engine_, bindings_, opts);
}

void Fleet::stop() {
  if (server_) {
    server_->stop();
    server_.reset();
  }
}

std::string stats_line(const StatsSnapshot& s, double t_seconds, const char* event) {
  nlohmann::ordered_json j;
  if (event) j["event"] = event;
  j["t"] = std::round(t_seconds * 1000.0) / 1000.0;
  j["endpoints"] = s.endpoints.size();
  j["msgs_in"] = s.msgs_in;
  j["msgs_out"] = s.msgs_out;
  j["violations"] = s.violations;
  j["open_channels"] = s.open_channels;
  return j.dump();
}

int run_fleet(const FleetConfig& config, std::ostream& out, std::ostream& err, const ShutdownWait& wait) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto since = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  std::unique_ptr<Fleet> fleet;
  try {
    fleet = std::make_unique<Fleet>(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SpecError& e) {
    err << "protocol error in " << config.protocol_file << " at line " << e.line() << ", column " << e.column()
        << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "startup error: " << e.what() << "\n";
    return kExitStartup;
  }
  try {
    fleet->start();
  } catch (const net::NetworkError& e) {
    err << "startup error: " << e.what() << "\n";
    return kExitStartup;
  }

  {
    nlohmann::ordered_json ready;
    ready["event"] = "ready";
    ready["endpoints"] = config.endpoint_count;
    ready["listeners"] = fleet->server()->listener_count();
    ready["fd_budget"] = fleet->server()->fd_budget();
    ready["first"] = net::to_string(fleet->bindings().front());
    ready["startup_ms"] = static_cast<std::int64_t>(since() * 1000.0);
    out << ready.dump() << std::endl;
  }

  const auto interval = config.stats_interval_ms > 0 ? std::chrono::milliseconds(config.stats_interval_ms)
                                                     : std::chrono::milliseconds(3'600'000);
  auto next = Clock::now() + interval;
  for (;;) {
    const auto left = std::chrono::ceil<std::chrono::milliseconds>(next - Clock::now());
    if (wait(std::max(left, std::chrono::milliseconds(0)))) break;
    if (Clock::now() >= next) {
      if (config.stats_interval_ms > 0) out << stats_line(fleet->engine().stats(), since()) << std::endl;
      next += interval;
    }
  }
  fleet->stop();
  out << stats_line(fleet->engine().stats(), since(), "final") << std::endl;
  return kExitClean;
}

}  // namespace svcemu
