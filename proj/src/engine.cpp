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

#include "svcemu/engine.hpp"

#include <bit>
#include <iostream>
#include <random>

#include "svcemu/ldap_codec.hpp"

namespace svcemu {

void FaultPolicy::validate() const {
  if (max_delay_ms < 0) throw std::invalid_argument("faults.max_delay_ms must be >= 0");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
    throw std::invalid_argument("faults.drop_probability must be within [0, 1]");
}

FaultDecision apply_faults(const FaultPolicy& policy, std::size_t endpoint, std::uint64_t channel,
                           std::uint64_t ordinal) {
  if (!policy.active()) return {};
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(policy.seed), hi(policy.seed), lo(endpoint), hi(endpoint),
                    lo(channel),     hi(channel),     lo(ordinal),  hi(ordinal)};
  std::mt19937_64 rng(seq);
  FaultDecision d;
  if (policy.max_delay_ms > 0)
    d.delay = std::chrono::milliseconds(
        std::uniform_int_distribution<std::int64_t>(0, policy.max_delay_ms)(rng));
  // Inclusive ends are exact: 0 never drops and 1 always drops.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  d.deliver = !(u < policy.drop_probability);
  return d;
}

std::optional<ViolationPolicy> parse_violation_policy(std::string_view s) {
  if (s == "close") return ViolationPolicy::Close;
  if (s == "reject") return ViolationPolicy::Reject;
  return std::nullopt;
}

std::string to_string(ViolationPolicy p) { return p == ViolationPolicy::Close ? "close" : "reject"; }

std::size_t latency_bucket(std::chrono::nanoseconds d) {
  const auto us = static_cast<std::uint64_t>(std::max<std::int64_t>(0, d.count() / 1000));
  return std::min<std::size_t>(std::bit_width(us), kLatencyBuckets - 1);
}

struct Engine::Runtime {
  explicit Runtime(EndpointModel m) : model(std::move(m)) {}

  EndpointModel model;
  mutable std::mutex mu;  // guards model.store and handler invocation
  bool halted = false;
  std::atomic<std::uint64_t> next_channel{0};
  std::atomic<std::uint64_t> msgs_in{0};
  std::atomic<std::uint64_t> msgs_out{0};
  std::atomic<std::uint64_t> violations{0};
  std::atomic<std::uint64_t> open_channels{0};
  std::array<std::atomic<std::uint64_t>, kLatencyBuckets> latency{};
};

Engine::Engine(ViolationPolicy policy, std::size_t violation_log_limit)
    : policy_(policy), violation_log_limit_(violation_log_limit) {}

Engine::~Engine() = default;

std::size_t Engine::add_endpoint(EndpointModel model) {
  if (!model.protocol || !model.dispatch)
    throw EngineError(EngineError::Kind::InvalidModel, "endpoint '" + model.id + "' lacks protocol or dispatch");
  if (by_id_.count(model.id))
    throw EngineError(EngineError::Kind::InvalidModel, "duplicate endpoint id '" + model.id + "'");
  const auto missing = model.dispatch->missing(model.protocol->received_shapes());
  if (!missing.empty()) {
    std::string names;
    for (const auto& s : missing) names += (names.empty() ? "" : ", ") + s.name();
    throw EngineError(EngineError::Kind::InvalidModel,
                      "endpoint '" + model.id + "' has no handler for received shapes: " + names);
  }
  model.faults.validate();
  auto rt = std::make_unique<Runtime>(std::move(model));
  const std::size_t index = endpoints_.size();
  by_id_.emplace(rt->model.id, index);
  endpoints_.push_back(std::move(rt));
  return index;
}

std::optional<std::size_t> Engine::find_endpoint(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Engine::Runtime& Engine::runtime(std::size_t endpoint) const {
  if (endpoint >= endpoints_.size())
    throw EngineError(EngineError::Kind::EndpointUnknown, "unknown endpoint #" + std::to_string(endpoint));
  return *endpoints_[endpoint];
}

const std::string& Engine::endpoint_id(std::size_t index) const { return runtime(index).model.id; }

Channel Engine::open_channel(std::size_t endpoint) {
  Runtime& rt = runtime(endpoint);
  Channel ch;
  ch.endpoint = endpoint;
  ch.channel_id = rt.next_channel.fetch_add(1);
  ch.protocol_state = rt.model.protocol->root();
  rt.open_channels.fetch_add(1);
  return ch;
}

Channel Engine::open_channel(const std::string& endpoint_id) {
  auto idx = find_endpoint(endpoint_id);
  if (!idx) throw EngineError(EngineError::Kind::EndpointUnknown, "unknown endpoint '" + endpoint_id + "'");
  return open_channel(*idx);
}

void Engine::close_channel(const Channel& ch) { runtime(ch.endpoint).open_channels.fetch_sub(1); }

void Engine::record_violation(std::size_t endpoint, const Channel& ch, std::string event) {
  Runtime& rt = runtime(endpoint);
  rt.violations.fetch_add(1);
  ConformanceViolation v{rt.model.id, ch.channel_id, std::move(event), to_string(ch.protocol_state),
                         std::chrono::system_clock::now()};
  std::lock_guard lock(log_mu_);
  violation_log_.push_back(std::move(v));
  while (violation_log_.size() > violation_log_limit_) violation_log_.pop_front();
}

void Engine::record_decode_error(const Channel& ch, const std::string& detail) {
  record_violation(ch.endpoint, ch, "<undecodable: " + detail + ">");
}

ProcessResult Engine::process_request(Channel& ch, const Message& msg) {
  Runtime& rt = runtime(ch.endpoint);
  const ProtocolSpec& spec = *rt.model.protocol;
  rt.msgs_in.fetch_add(1);
  const std::uint64_t ordinal = ch.ordinal++;

  ProcessResult out;
  std::unique_lock lock(rt.mu);
  if (rt.halted) {
    out.outcome = ProcessResult::Outcome::ModelFault;
    out.diagnostic = "endpoint halted";
    ch.closing = true;
    return out;
  }

  const Event rx{Direction::Receive, msg.shape()};
  StepOutcome accepted = step(spec, ch.protocol_state, rx);
  if (!accepted.progressed()) {
    lock.unlock();
    record_violation(ch.endpoint, ch, to_string(rx));
    out.outcome = ProcessResult::Outcome::Violation;
    auto paired = ldap::response_shape_for(msg.shape());
    if (policy_ == ViolationPolicy::Reject && paired) {
      out.responses.push_back(ldap::result(*paired, msg.correlation_id(), ldap::ResultCode::kProtocolError, {},
                                           "message not permitted in the current protocol state"));
      out.faults = apply_faults(rt.model.faults, ch.endpoint, ch.channel_id, ordinal);
      if (out.faults.deliver) rt.msgs_out.fetch_add(1);
    } else {
      ch.closing = true;
    }
    return out;
  }

  const Handler* handler = rt.model.dispatch->lookup(msg.shape());
  if (!handler) {
    rt.halted = true;
    out.outcome = ProcessResult::Outcome::ModelFault;
    out.diagnostic = "no handler bound for '" + msg.shape().name() + "'";
    ch.closing = true;
    std::cerr << "model-integrity fault on " << rt.model.id << ": " << out.diagnostic << "\n";
    return out;
  }

  const auto t0 = std::chrono::steady_clock::now();
  HandlerResult hr = (*handler)(msg, rt.model.store);
  rt.latency[latency_bucket(std::chrono::steady_clock::now() - t0)].fetch_add(1);

  ProtocolTerm state = std::move(accepted.next);
  for (const auto& r : hr.responses) {
    StepOutcome sent = step(spec, state, Event{Direction::Transmit, r.shape()});
    if (!sent.progressed()) {
      rt.halted = true;
      out.outcome = ProcessResult::Outcome::ModelFault;
      out.diagnostic = "handler for '" + msg.shape().name() + "' emitted '" + r.shape().name() +
                       "' which the protocol does not allow in state " + to_string(state);
      ch.closing = true;
      lock.unlock();
      record_violation(ch.endpoint, ch, to_string(Event{Direction::Transmit, r.shape()}));
      std::cerr << "model-integrity fault on " << rt.model.id << ": " << out.diagnostic << "\n";
      return out;
    }
    state = std::move(sent.next);
  }
  if (hr.updated_store) rt.model.store = std::move(*hr.updated_store);
  lock.unlock();

  ch.protocol_state = std::move(state);
  if (hr.close_channel) ch.closing = true;
  out.faults = apply_faults(rt.model.faults, ch.endpoint, ch.channel_id, ordinal);
  if (out.faults.deliver) rt.msgs_out.fetch_add(hr.responses.size());
  out.responses = std::move(hr.responses);
  return out;
}

directory::DirectoryStore Engine::store(std::size_t endpoint) const {
  Runtime& rt = runtime(endpoint);
  std::lock_guard lock(rt.mu);
  return rt.model.store;
}

bool Engine::halted(std::size_t endpoint) const {
  Runtime& rt = runtime(endpoint);
  std::lock_guard lock(rt.mu);
  return rt.halted;
}

StatsSnapshot Engine::stats() const {
  StatsSnapshot s;
  s.endpoints.reserve(endpoints_.size());
  for (const auto& rt : endpoints_) {
    EndpointStats e;
    e.id = rt->model.id;
    e.msgs_in = rt->msgs_in.load();
    e.msgs_out = rt->msgs_out.load();
    e.violations = rt->violations.load();
    e.open_channels = rt->open_channels.load();
    e.channels_opened = rt->next_channel.load();
    {
      std::lock_guard lock(rt->mu);
      e.halted = rt->halted;
    }
    for (std::size_t i = 0; i < kLatencyBuckets; ++i) {
      e.handler_latency[i] = rt->latency[i].load();
      s.handler_latency[i] += e.handler_latency[i];
    }
    s.msgs_in += e.msgs_in;
    s.msgs_out += e.msgs_out;
    s.violations += e.violations;
    s.open_channels += e.open_channels;
    s.endpoints.push_back(std::move(e));
  }
  return s;
}

std::vector<ConformanceViolation> Engine::recent_violations() const {
  std::lock_guard lock(log_mu_);
  return {violation_log_.begin(), violation_log_.end()};
}

}  // namespace svcemu
