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

// TCP front end: one listening socket per endpoint, and one conduit per
// accepted connection translating BER frames to engine messages and back.
//
// A small, fixed set of epoll loops serves every listener and conduit, so an
// idle endpoint costs one registered file descriptor and nothing else.

#ifndef SVCEMU_NETWORK_HPP_
#define SVCEMU_NETWORK_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svcemu/engine.hpp"
#include "svcemu/ldap_codec.hpp"

namespace svcemu::net {

struct NativeBinding {
  std::string endpoint_id;
  std::string address;  // numeric IPv4 or IPv6
  std::uint16_t port = 0;
  friend bool operator==(const NativeBinding&, const NativeBinding&) = default;
};

std::string to_string(const NativeBinding& b);

class NetworkError : public std::runtime_error {
 public:
  enum class Kind { InvalidBinding, DuplicateBinding, AddressInUse, PermissionDenied, FdLimit, System };

  NetworkError(Kind kind, const std::string& what, std::optional<NativeBinding> binding = std::nullopt)
      : std::runtime_error(what), kind_(kind), binding_(std::move(binding)) {}

  Kind kind() const noexcept { return kind_; }
  const std::optional<NativeBinding>& binding() const noexcept { return binding_; }

 private:
  Kind kind_;
  std::optional<NativeBinding> binding_;
};

struct NetworkOptions {
  std::size_t io_threads = 0;  // 0: one per hardware thread
  std::size_t max_frame = ldap::kDefaultMaxFrame;
  std::chrono::milliseconds write_timeout{30000};
  std::size_t outbound_queue_limit = 1024;  // messages per conduit
  std::size_t expected_peak_connections = 1024;
};

/// Listeners plus the loops that serve them. Destruction stops everything.
class Server {
 public:
  /// Validates the bindings, checks the descriptor budget, binds every
  /// listener and starts serving. All-or-nothing: on any failure nothing
  /// stays bound and NetworkError names the offending binding.
  static std::unique_ptr<Server> start(Engine& engine, const std::vector<NativeBinding>& bindings,
                                       const NetworkOptions& options = {});

  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Stops accepting, closes every connection and joins the loops.
  void stop();

  std::size_t listener_count() const noexcept;
  std::size_t open_conduits() const noexcept;
  /// Descriptors the fleet may need: listeners + peak connections + slack.
  std::size_t fd_budget() const noexcept;

 private:
  struct Impl;
  explicit Server(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Attempts to lift the soft RLIMIT_NOFILE to at least `wanted` (bounded by
/// the hard limit). Returns the resulting soft limit.
std::size_t raise_fd_limit(std::size_t wanted);

}  // namespace svcemu::net

#endif  // SVCEMU_NETWORK_HPP_
