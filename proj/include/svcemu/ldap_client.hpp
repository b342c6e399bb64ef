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

// Minimal synchronous LDAP client over a blocking-with-deadline TCP socket.

#ifndef SVCEMU_LDAP_CLIENT_HPP_
#define SVCEMU_LDAP_CLIENT_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "svcemu/ber.hpp"
#include "svcemu/ldap_codec.hpp"
#include "svcemu/message.hpp"

namespace svcemu::ldap {

class ClientError : public std::runtime_error {
 public:
  enum class Kind { Refused, Timeout, Closed, Io, Decode };
  ClientError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::string to_string(ClientError::Kind k);

class LdapClient {
 public:
  using Clock = std::chrono::steady_clock;

  /// Throws ClientError(Refused/Timeout/Io).
  static LdapClient connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

  LdapClient(LdapClient&& other) noexcept;
  LdapClient& operator=(LdapClient&& other) noexcept;
  ~LdapClient();

  void send(const Message& msg);
  /// Writes bytes verbatim; counted as `frames` messages.
  void send_raw(const ber::Bytes& bytes, std::size_t frames = 1);

  /// Next response. Throws ClientError(Timeout/Closed/Decode).
  Message receive(Clock::time_point deadline);

  /// True once the server closes the connection before `deadline` (any
  /// responses still arriving are decoded and counted).
  bool wait_for_close(Clock::time_point deadline);

  std::size_t sent() const noexcept { return sent_; }
  std::size_t received() const noexcept { return received_; }

  void close();

 private:
  explicit LdapClient(int fd) : fd_(fd) {}
  /// Reads once; returns false on EOF. Throws on timeout.
  bool fill(Clock::time_point deadline);

  int fd_ = -1;
  ber::Bytes buf_;
  std::size_t sent_ = 0;
  std::size_t received_ = 0;
  bool eof_ = false;
};

}  // namespace svcemu::ldap

#endif  // SVCEMU_LDAP_CLIENT_HPP_
