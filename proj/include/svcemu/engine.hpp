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

// Endpoint execution engine.
//
// Endpoints are passive data: a protocol, a dispatch dictionary and a store,
// activated only when a request arrives on one of their channels. Channels
// are owned by the caller (normally a network conduit), which guarantees
// that one channel is never processed from two threads at once. Handler
// invocations on one endpoint are serialized by a per-endpoint mutex.

#ifndef SVCEMU_ENGINE_HPP_
#define SVCEMU_ENGINE_HPP_

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "svcemu/behavior.hpp"
#include "svcemu/directory.hpp"
#include "svcemu/message.hpp"
#include "svcemu/protocol.hpp"

namespace svcemu {

struct FaultPolicy {
  std::int64_t max_delay_ms = 0;
  double drop_probability = 0.0;
  std::uint64_t seed = 0;

  bool active() const noexcept { return max_delay_ms > 0 || drop_probability > 0.0; }
  /// Throws std::invalid_argument when out of range.
  void validate() const;
};

struct FaultDecision {
  std::chrono::milliseconds delay{0};
  bool deliver = true;
  friend bool operator==(const FaultDecision&, const FaultDecision&) = default;
};

/// Pure function of its arguments: the same (seed, endpoint, channel,
/// ordinal) always yields the same decision.
FaultDecision apply_faults(const FaultPolicy& policy, std::size_t endpoint, std::uint64_t channel,
                           std::uint64_t ordinal);

enum class ViolationPolicy { Close, Reject };

std::optional<ViolationPolicy> parse_violation_policy(std::string_view s);
std::string to_string(ViolationPolicy p);

struct EndpointModel {
  std::string id;
  std::shared_ptr<const ProtocolSpec> protocol;
  std::shared_ptr<const DispatchDictionary> dispatch;
  directory::DirectoryStore store;
  FaultPolicy faults;
};

struct Channel {
  std::uint64_t channel_id = 0;
  std::size_t endpoint = 0;
  ProtocolTerm protocol_state;
  std::uint64_t ordinal = 0;  // requests processed so far
  bool closing = false;
};

struct ConformanceViolation {
  std::string endpoint_id;
  std::uint64_t channel_id = 0;
  std::string offending_event;  // "?SearchEntry", or "<undecodable: detail>"
  std::string protocol_state;
  std::chrono::system_clock::time_point timestamp;
};

class EngineError : public std::runtime_error {
 public:
  enum class Kind { EndpointUnknown, InvalidModel };
  EngineError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct ProcessResult {
  enum class Outcome { Ok, Violation, ModelFault };
  Outcome outcome = Outcome::Ok;
  std::vector<Message> responses;  // to write, after `faults.delay`
  FaultDecision faults;
  std::string diagnostic;  // ModelFault only
};

/// Handler latency histogram: bucket i counts latencies in
/// [2^(i-1), 2^i) microseconds, bucket 0 holds sub-microsecond calls and
/// the last bucket is open-ended.
inline constexpr std::size_t kLatencyBuckets = 24;
using LatencyHistogram = std::array<std::uint64_t, kLatencyBuckets>;

std::size_t latency_bucket(std::chrono::nanoseconds d);

struct EndpointStats {
  std::string id;
  std::uint64_t msgs_in = 0;
  std::uint64_t msgs_out = 0;
  std::uint64_t violations = 0;
  std::uint64_t open_channels = 0;
  std::uint64_t channels_opened = 0;
  bool halted = false;
  LatencyHistogram handler_latency{};
};

struct StatsSnapshot {
  std::vector<EndpointStats> endpoints;
  std::uint64_t msgs_in = 0;
  std::uint64_t msgs_out = 0;
  std::uint64_t violations = 0;
  std::uint64_t open_channels = 0;
  LatencyHistogram handler_latency{};
};

class Engine {
 public:
  explicit Engine(ViolationPolicy policy = ViolationPolicy::Close, std::size_t violation_log_limit = 1024);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Registers a model and returns its index. Throws EngineError(InvalidModel)
  /// when the dispatch dictionary leaves a received shape unbound, or the id
  /// is duplicated. Not thread-safe with respect to running traffic.
  std::size_t add_endpoint(EndpointModel model);

  std::size_t endpoint_count() const noexcept { return endpoints_.size(); }
  std::optional<std::size_t> find_endpoint(const std::string& id) const;
  const std::string& endpoint_id(std::size_t index) const;

  ViolationPolicy violation_policy() const noexcept { return policy_; }

  /// Throws EngineError(EndpointUnknown).
  Channel open_channel(std::size_t endpoint);
  Channel open_channel(const std::string& endpoint_id);
  void close_channel(const Channel& ch);

  /// Runs one request through conformance check, dispatch, transmission
  /// check, store update and fault decision. Mutates `ch`.
  ProcessResult process_request(Channel& ch, const Message& msg);

  /// Records an undecodable frame on `ch` as a violation.
  void record_decode_error(const Channel& ch, const std::string& detail);

  /// Copy of the current store of an endpoint.
  directory::DirectoryStore store(std::size_t endpoint) const;
  bool halted(std::size_t endpoint) const;

  StatsSnapshot stats() const;
  std::vector<ConformanceViolation> recent_violations() const;

 private:
  struct Runtime;

  void record_violation(std::size_t endpoint, const Channel& ch, std::string event);
  Runtime& runtime(std::size_t endpoint) const;

  ViolationPolicy policy_;
  std::size_t violation_log_limit_;
  std::vector<std::unique_ptr<Runtime>> endpoints_;
  std::unordered_map<std::string, std::size_t> by_id_;

  mutable std::mutex log_mu_;
  std::deque<ConformanceViolation> violation_log_;
};

}  // namespace svcemu

#endif  // SVCEMU_ENGINE_HPP_
