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

#include "svcemu/ldap_client.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

namespace svcemu::ldap {

namespace {

int remaining_ms(LdapClient::Clock::time_point deadline) {
  auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - LdapClient::Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<std::int64_t>(left, 1 << 30));
}

}  // namespace

std::string to_string(ClientError::Kind k) {
  switch (k) {
    case ClientError::Kind::Refused: return "connection refused";
    case ClientError::Kind::Timeout: return "timeout";
    case ClientError::Kind::Closed: return "connection closed";
    case ClientError::Kind::Io: return "i/o error";
    case ClientError::Kind::Decode: return "decode error";
  }
  return "error";
}

LdapClient LdapClient::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw ClientError(ClientError::Kind::Io, "resolve " + host + ": " + gai_strerror(rc));

  std::string last_error = "no addresses";
  ClientError::Kind last_kind = ClientError::Kind::Io;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      int pr = ::poll(&p, 1, remaining_ms(deadline));
      if (pr == 0) {
        ::close(fd);
        ::freeaddrinfo(res);
        throw ClientError(ClientError::Kind::Timeout, "connect to " + host + ":" + service + " timed out");
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
      errno = err;
    }
    if (rc != 0) {
      last_kind = errno == ECONNREFUSED ? ClientError::Kind::Refused : ClientError::Kind::Io;
      last_error = std::strerror(errno);
      ::close(fd);
      continue;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    ::freeaddrinfo(res);
    return LdapClient(fd);
  }
  ::freeaddrinfo(res);
  throw ClientError(last_kind, "connect to " + host + ":" + service + ": " + last_error);
}

LdapClient::LdapClient(LdapClient&& o) noexcept
    : fd_(std::exchange(o.fd_, -1)), buf_(std::move(o.buf_)), sent_(o.sent_), received_(o.received_), eof_(o.eof_) {}

LdapClient& LdapClient::operator=(LdapClient&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
    buf_ = std::move(o.buf_);
    sent_ = o.sent_;
    received_ = o.received_;
    eof_ = o.eof_;
  }
  return *this;
}

LdapClient::~LdapClient() { close(); }

void LdapClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void LdapClient::send(const Message& msg) { send_raw(encode(msg).bytes, 1); }

void LdapClient::send_raw(const ber::Bytes& bytes, std::size_t frames) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n > 0) {
      off += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      pollfd p{fd_, POLLOUT, 0};
      ::poll(&p, 1, 1000);
      continue;
    }
    throw ClientError(ClientError::Kind::Closed, std::string("send: ") + std::strerror(errno));
  }
  sent_ += frames;
}

bool LdapClient::fill(Clock::time_point deadline) {
  for (;;) {
    pollfd p{fd_, POLLIN, 0};
    int pr = ::poll(&p, 1, remaining_ms(deadline));
    if (pr < 0 && errno == EINTR) continue;
    if (pr == 0) throw ClientError(ClientError::Kind::Timeout, "no response before deadline");
    std::uint8_t tmp[16384];
    ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
    if (n > 0) {
      buf_.insert(buf_.end(), tmp, tmp + n);
      return true;
    }
    if (n == 0) {
      eof_ = true;
      return false;
    }
    if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
    if (errno == ECONNRESET) {
      eof_ = true;
      return false;
    }
    throw ClientError(ClientError::Kind::Io, std::string("recv: ") + std::strerror(errno));
  }
}

Message LdapClient::receive(Clock::time_point deadline) {
  for (;;) {
    try {
      auto header = ber::read_header(ber::ByteView(buf_));
      if (header.status == ber::HeaderStatus::Complete &&
          buf_.size() >= header.header_len + header.content_len) {
        const std::size_t total = header.header_len + static_cast<std::size_t>(header.content_len);
        Message m = decode(ber::ByteView(buf_.data(), total));
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
        ++received_;
        return m;
      }
    } catch (const std::exception& e) {
      throw ClientError(ClientError::Kind::Decode, e.what());
    }
    if (eof_ || !fill(deadline)) throw ClientError(ClientError::Kind::Closed, "server closed the connection");
  }
}

bool LdapClient::wait_for_close(Clock::time_point deadline) {
  try {
    for (;;) receive(deadline);
  } catch (const ClientError& e) {
    return e.kind() == ClientError::Kind::Closed;
  }
}

}  // namespace svcemu::ldap
