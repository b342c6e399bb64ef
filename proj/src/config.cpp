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

#include "svcemu/config.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "svcemu/directory.hpp"

namespace svcemu {

namespace {

using nlohmann::json;

[[noreturn]] void constraint(const std::string& field, const std::string& rule) {
  throw ConfigError(ConfigError::Kind::Constraint, field + ": " + rule);
}

std::pair<int, int> line_col(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

bool numeric_ip(const std::string& s) {
  unsigned char buf[16];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

template <typename T>
T get_int(const json& j, const std::string& field, std::int64_t lo, std::int64_t hi) {
  if (!j.is_number_integer()) constraint(field, "must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < lo || v > hi) constraint(field, "must be within [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<T>(v);
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) constraint(field, "must be a string");
  return j.get<std::string>();
}

void parse_faults(const json& j, FleetConfig& cfg) {
  if (!j.is_object()) constraint("faults", "must be an object");
  for (const auto& [key, v] : j.items()) {
    const std::string field = "faults." + key;
    if (key == "max_delay_ms") {
      cfg.faults.max_delay_ms = get_int<std::int64_t>(v, field, 0, 3'600'000);
    } else if (key == "drop_probability") {
      if (!v.is_number()) constraint(field, "must be a number");
      cfg.faults.drop_probability = v.get<double>();
    } else if (key == "seed") {
      if (!v.is_number_integer()) constraint(field, "must be an integer");
      cfg.faults.seed = v.is_number_unsigned() ? v.get<std::uint64_t>()
                                               : static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else if (key == "endpoints") {
      if (!v.is_array()) constraint(field, "must be an array of endpoint indices");
      std::set<std::size_t> idx;
      for (const auto& e : v) idx.insert(get_int<std::size_t>(e, field, 0, 1'000'000));
      cfg.fault_endpoints = std::move(idx);
    } else {
      throw ConfigError(ConfigError::Kind::Constraint, "unknown key '" + field + "'");
    }
  }
}

}  // namespace

void FleetConfig::validate() const {
  if (endpoint_count < 1) constraint("endpoint_count", "must be >= 1");
  if (address_mode == AddressMode::PortRange) {
    if (base_port < 1 || base_port > 65535) constraint("base_port", "must be within [1, 65535]");
    if (static_cast<std::uint64_t>(base_port) + endpoint_count - 1 > 65535)
      constraint("endpoint_count", "base_port + endpoint_count - 1 = " +
                                       std::to_string(base_port + endpoint_count - 1) +
                                       " overflows the port range (max 65535)");
    if (!numeric_ip(bind_address)) constraint("bind_address", "must be a numeric IP address");
  } else {
    if (base_port < 1 || base_port > 65535) constraint("base_port", "must be within [1, 65535]");
    if (addresses.size() < endpoint_count)
      constraint("addresses", "multi-ip mode needs one address per endpoint (" + std::to_string(endpoint_count) +
                                  " required, " + std::to_string(addresses.size()) + " given)");
    std::set<std::string> seen;
    for (const auto& a : addresses) {
      if (!numeric_ip(a)) constraint("addresses", "'" + a + "' is not a numeric IP address");
      if (!seen.insert(a).second) constraint("addresses", "duplicate address '" + a + "'");
    }
  }
  if (protocol_file != "ldap" && !std::filesystem::exists(protocol_file))
    constraint("protocol_file", "file '" + protocol_file + "' does not exist");
  if (seed_users < 0) constraint("seed_users", "must be >= 0");
  try {
    if (directory::DistinguishedName::parse(base_dn).empty()) constraint("base_dn", "must not be empty");
    directory::DistinguishedName::parse(admin_dn);
  } catch (const directory::DnSyntaxError& e) {
    constraint("base_dn/admin_dn", std::string("invalid DN: ") + e.what());
  }
  try {
    faults.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::Constraint, e.what());
  }
  if (fault_endpoints)
    for (auto i : *fault_endpoints)
      if (i >= endpoint_count) constraint("faults.endpoints", "index " + std::to_string(i) + " >= endpoint_count");
  if (max_frame_size < 64) constraint("max_frame_size", "must be >= 64");
  if (stats_interval_ms < 0) constraint("stats_interval_ms", "must be >= 0");
  if (write_timeout_ms < 1) constraint("write_timeout_ms", "must be >= 1");
  if (outbound_queue_limit < 1) constraint("outbound_queue_limit", "must be >= 1");
}

FleetConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(ConfigError::Kind::Parse,
                      "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          e.what(),
                      line, col);
  }
  if (!doc.is_object()) throw ConfigError(ConfigError::Kind::Parse, "top level must be a JSON object", 1, 1);

  FleetConfig cfg;
  bool have_count = false;
  for (const auto& [key, v] : doc.items()) {
    if (key == "endpoint_count") {
      cfg.endpoint_count = get_int<std::size_t>(v, key, 0, 1'000'000);
      have_count = true;
    } else if (key == "base_port") {
      cfg.base_port = get_int<int>(v, key, 0, 1'000'000);
    } else if (key == "address_mode") {
      const auto m = get_string(v, key);
      if (m == "port-range") cfg.address_mode = AddressMode::PortRange;
      else if (m == "multi-ip") cfg.address_mode = AddressMode::MultiIp;
      else constraint(key, "must be \"port-range\" or \"multi-ip\"");
    } else if (key == "addresses") {
      if (!v.is_array()) constraint(key, "must be an array of strings");
      for (const auto& a : v) cfg.addresses.push_back(get_string(a, key));
    } else if (key == "bind_address") {
      cfg.bind_address = get_string(v, key);
    } else if (key == "protocol_file") {
      cfg.protocol_file = get_string(v, key);
      if (cfg.protocol_file != "ldap" && std::filesystem::path(cfg.protocol_file).is_relative() && !base_dir.empty())
        cfg.protocol_file = (base_dir / cfg.protocol_file).string();
    } else if (key == "seed_users") {
      cfg.seed_users = get_int<int>(v, key, 0, 1'000'000);
    } else if (key == "base_dn") {
      cfg.base_dn = get_string(v, key);
    } else if (key == "admin_dn") {
      cfg.admin_dn = get_string(v, key);
    } else if (key == "admin_password") {
      cfg.admin_password = get_string(v, key);
    } else if (key == "allow_anonymous") {
      if (!v.is_boolean()) constraint(key, "must be a boolean");
      cfg.allow_anonymous = v.get<bool>();
    } else if (key == "faults") {
      parse_faults(v, cfg);
    } else if (key == "violation_policy") {
      auto p = parse_violation_policy(get_string(v, key));
      if (!p) constraint(key, "must be \"close\" or \"reject\"");
      cfg.violation_policy = *p;
    } else if (key == "max_frame_size") {
      cfg.max_frame_size = get_int<std::size_t>(v, key, 0, std::int64_t{1} << 30);
    } else if (key == "stats_interval_ms") {
      cfg.stats_interval_ms = get_int<std::int64_t>(v, key, 0, 86'400'000);
    } else if (key == "write_timeout_ms") {
      cfg.write_timeout_ms = get_int<std::int64_t>(v, key, 0, 86'400'000);
    } else if (key == "outbound_queue_limit") {
      cfg.outbound_queue_limit = get_int<std::size_t>(v, key, 0, 1'000'000);
    } else if (key == "io_threads") {
      cfg.io_threads = get_int<std::size_t>(v, key, 0, 1024);
    } else if (key == "expected_peak_connections") {
      cfg.expected_peak_connections = get_int<std::size_t>(v, key, 0, 1'000'000);
    } else {
      throw ConfigError(ConfigError::Kind::Constraint, "unknown key '" + key + "'");
    }
  }
  if (!have_count) constraint("endpoint_count", "is required");
  cfg.validate();
  return cfg;
}

FleetConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::Io, "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_fault_override(std::string_view spec, FaultPolicy& into) {
  FaultPolicy p = into;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const auto item = spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    pos = comma == std::string_view::npos ? spec.size() + 1 : comma + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) constraint("--faults", "expected key=value, got '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto val = std::string(item.substr(eq + 1));
    auto bad = [&] { constraint("--faults", "bad value for '" + std::string(key) + "': '" + val + "'"); };
    if (key == "max-delay-ms") {
      std::int64_t v = 0;
      auto [p2, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec != std::errc() || p2 != val.data() + val.size()) bad();
      p.max_delay_ms = v;
    } else if (key == "drop") {
      std::size_t used = 0;
      try {
        p.drop_probability = std::stod(val, &used);
      } catch (const std::exception&) {
        bad();
      }
      if (used != val.size()) bad();
    } else if (key == "seed") {
      std::uint64_t v = 0;
      auto [p2, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec != std::errc() || p2 != val.data() + val.size()) bad();
      p.seed = v;
    } else {
      constraint("--faults", "unknown key '" + std::string(key) + "' (expected max-delay-ms, drop, seed)");
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::Constraint, e.what());
  }
  into = p;
}

}  // namespace svcemu
