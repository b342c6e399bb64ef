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

#include "svcemu/network.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/epoll.h>
#include <sys/eventfd.h>
#include <sys/resource.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <deque>
#include <iostream>
#include <queue>
#include <set>
#include <thread>
#include <unordered_map>
#include <utility>

namespace svcemu::net {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kListenerTag = std::uint64_t{1} << 63;
constexpr std::uint64_t kWakeTag = std::uint64_t{1} << 62;
constexpr std::size_t kReadChunk = 64 * 1024;
constexpr std::size_t kFdSlack = 64;

std::string errno_text(int e) { return std::strerror(e); }

bool parse_address(const std::string& text, std::uint16_t port, sockaddr_storage& out, socklen_t& len) {
  std::memset(&out, 0, sizeof out);
  auto* v4 = reinterpret_cast<sockaddr_in*>(&out);
  if (inet_pton(AF_INET, text.c_str(), &v4->sin_addr) == 1) {
    v4->sin_family = AF_INET;
    v4->sin_port = htons(port);
    len = sizeof(sockaddr_in);
    return true;
  }
  auto* v6 = reinterpret_cast<sockaddr_in6*>(&out);
  if (inet_pton(AF_INET6, text.c_str(), &v6->sin6_addr) == 1) {
    v6->sin6_family = AF_INET6;
    v6->sin6_port = htons(port);
    len = sizeof(sockaddr_in6);
    return true;
  }
  return false;
}

struct Listener {
  int fd = -1;
  std::size_t endpoint = 0;
  NativeBinding binding;
};

struct Pending {
  Clock::time_point due;
  ber::Bytes bytes;
  std::size_t messages = 0;
};

struct Conduit {
  std::uint64_t id = 0;
  int fd = -1;
  Channel channel;
  ber::Bytes rbuf;
  std::deque<Pending> pending;
  ber::Bytes wbuf;
  std::size_t woff = 0;
  std::size_t wbuf_messages = 0;
  std::size_t queued_messages = 0;
  bool reading = true;        // EPOLLIN registered
  bool writing = false;       // EPOLLOUT registered
  bool peer_closed = false;
  bool closing = false;       // close once outbound drains
  bool discard_input = false; // fatal framing error seen
  Clock::time_point last_progress;
};

struct Timer {
  Clock::time_point due;
  enum class Kind { Pump, WriteCheck, Rearm } kind;
  std::uint64_t id;
  bool operator>(const Timer& o) const { return due > o.due; }
};

}  // namespace

struct Server::Impl {
  struct Loop {
    Impl* owner = nullptr;
    int epfd = -1;
    int wakefd = -1;
    std::thread thread;
    std::vector<std::size_t> listeners;  // indices into Impl::listeners
    std::unordered_map<std::uint64_t, std::unique_ptr<Conduit>> conduits;
    std::priority_queue<Timer, std::vector<Timer>, std::greater<>> timers;
    std::uint64_t next_conduit = 0;

    void run();
    void accept_from(std::size_t listener_index);
    void on_readable(Conduit& c);
    void process_frames(Conduit& c);
    void pump(Conduit& c);
    bool flush(Conduit& c);
    void update_interest(Conduit& c);
    void destroy(Conduit& c);
    void fire(const Timer& t);
  };

  Engine* engine = nullptr;
  NetworkOptions options;
  std::vector<Listener> listeners;
  std::vector<std::unique_ptr<Loop>> loops;
  std::atomic<bool> stopping{false};
  std::atomic<std::size_t> open_conduits{0};
  std::size_t fd_budget = 0;
  bool stopped = false;

  ~Impl() { shutdown(); }

  void shutdown() {
    if (stopped) return;
    stopped = true;
    stopping.store(true);
    for (auto& l : loops) {
      if (l->wakefd >= 0) {
        std::uint64_t one = 1;
        [[maybe_unused]] auto n = ::write(l->wakefd, &one, sizeof one);
      }
    }
    for (auto& l : loops)
      if (l->thread.joinable()) l->thread.join();
    for (auto& l : loops) {
      for (auto& [id, c] : l->conduits) {
        ::close(c->fd);
        engine->close_channel(c->channel);
        open_conduits.fetch_sub(1);
      }
      l->conduits.clear();
      if (l->epfd >= 0) ::close(l->epfd);
      if (l->wakefd >= 0) ::close(l->wakefd);
    }
    for (auto& li : listeners)
      if (li.fd >= 0) ::close(li.fd);
    listeners.clear();
  }
};

void Server::Impl::Loop::run() {
  std::vector<epoll_event> events(256);
  while (!owner->stopping.load()) {
    int timeout_ms = -1;
    if (!timers.empty()) {
      auto wait = std::chrono::ceil<std::chrono::milliseconds>(timers.top().due - Clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<std::int64_t>(wait, 0, 60000));
    }
    int n = ::epoll_wait(epfd, events.data(), static_cast<int>(events.size()), timeout_ms);
    if (n < 0) {
      if (errno == EINTR) continue;
      std::cerr << "epoll_wait: " << errno_text(errno) << "\n";
      return;
    }
    for (int i = 0; i < n; ++i) {
      const std::uint64_t tag = events[i].data.u64;
      if (tag == kWakeTag) return;
      if (tag & kListenerTag) {
        accept_from(static_cast<std::size_t>(tag & ~kListenerTag));
        continue;
      }
      auto it = conduits.find(tag);
      if (it == conduits.end()) continue;
      Conduit& c = *it->second;
      const auto ev = events[i].events;
      if (ev & (EPOLLIN | EPOLLHUP | EPOLLERR | EPOLLRDHUP)) {
        on_readable(c);
        if (!conduits.count(tag)) continue;
      }
      if (ev & EPOLLOUT) pump(c);
    }
    const auto now = Clock::now();
    while (!timers.empty() && timers.top().due <= now) {
      Timer t = timers.top();
      timers.pop();
      fire(t);
    }
  }
}

void Server::Impl::Loop::fire(const Timer& t) {
  if (t.kind == Timer::Kind::Rearm) {
    Listener& li = owner->listeners[t.id];
    epoll_event ev{};
    ev.events = EPOLLIN;
    ev.data.u64 = kListenerTag | t.id;
    ::epoll_ctl(epfd, EPOLL_CTL_ADD, li.fd, &ev);
    return;
  }
  auto it = conduits.find(t.id);
  if (it == conduits.end()) return;
  Conduit& c = *it->second;
  if (t.kind == Timer::Kind::WriteCheck) {
    if (c.woff < c.wbuf.size() && Clock::now() - c.last_progress >= owner->options.write_timeout) {
      destroy(c);
      return;
    }
    if (c.woff < c.wbuf.size())
      timers.push({c.last_progress + owner->options.write_timeout, Timer::Kind::WriteCheck, c.id});
    return;
  }
  pump(c);
}

void Server::Impl::Loop::accept_from(std::size_t listener_index) {
  Listener& li = owner->listeners[listener_index];
  for (int burst = 0; burst < 64; ++burst) {
    int fd = ::accept4(li.fd, nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR || errno == ECONNABORTED) return;
      if (errno == EMFILE || errno == ENFILE) {
        std::cerr << "accept on " << to_string(li.binding) << ": " << errno_text(errno)
                  << "; pausing this listener (raise the open-file limit with `ulimit -n`)\n";
        ::epoll_ctl(epfd, EPOLL_CTL_DEL, li.fd, nullptr);
        timers.push({Clock::now() + std::chrono::milliseconds(100), Timer::Kind::Rearm, listener_index});
        return;
      }
      std::cerr << "accept on " << to_string(li.binding) << ": " << errno_text(errno) << "\n";
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto c = std::make_unique<Conduit>();
    c->id = next_conduit++;
    c->fd = fd;
    c->channel = owner->engine->open_channel(li.endpoint);
    c->last_progress = Clock::now();
    epoll_event ev{};
    ev.events = EPOLLIN | EPOLLRDHUP;
    ev.data.u64 = c->id;
    if (::epoll_ctl(epfd, EPOLL_CTL_ADD, fd, &ev) != 0) {
      owner->engine->close_channel(c->channel);
      ::close(fd);
      continue;
    }
    owner->open_conduits.fetch_add(1);
    conduits.emplace(c->id, std::move(c));
  }
}

void Server::Impl::Loop::on_readable(Conduit& c) {
  if (c.reading && !c.peer_closed) {
    std::uint8_t buf[kReadChunk];
    for (;;) {
      ssize_t n = ::read(c.fd, buf, sizeof buf);
      if (n > 0) {
        if (!c.discard_input) c.rbuf.insert(c.rbuf.end(), buf, buf + n);
        if (static_cast<std::size_t>(n) < sizeof buf) break;
        continue;
      }
      if (n == 0) {
        c.peer_closed = true;
        break;
      }
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) break;
      destroy(c);  // reset by peer or similar
      return;
    }
  }
  process_frames(c);
  if (c.peer_closed) c.closing = true;
  pump(c);
}

void Server::Impl::Loop::process_frames(Conduit& c) {
  Engine& engine = *owner->engine;
  if (c.discard_input) {
    c.rbuf.clear();
    return;
  }
  std::size_t pos = 0;
  while (pos < c.rbuf.size() && c.queued_messages < owner->options.outbound_queue_limit) {
    ldap::FrameSplit split;
    try {
      // One frame at a time so backpressure can stop mid-buffer.
      ber::ByteView rest(c.rbuf.data() + pos, c.rbuf.size() - pos);
      auto header = ber::read_header(rest, 0);
      if (header.status == ber::HeaderStatus::NeedMore) break;
      if (header.content_len > owner->options.max_frame ||
          header.header_len + header.content_len > owner->options.max_frame)
        throw ldap::CodecError(ldap::CodecError::Kind::FrameExceedsMax, "frame exceeds maximum size", pos);
      const std::size_t total = header.header_len + static_cast<std::size_t>(header.content_len);
      if (rest.size() < total) break;
      split.frames.push_back({ber::Bytes(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(total))});
      pos += total;
    } catch (const std::exception& e) {
      engine.record_decode_error(c.channel, e.what());
      c.discard_input = true;
      c.closing = true;
      c.rbuf.clear();
      return;
    }

    std::optional<Message> msg;
    try {
      msg = ldap::decode(split.frames.front(), owner->options.max_frame);
    } catch (const std::exception& e) {
      engine.record_decode_error(c.channel, e.what());
      c.discard_input = true;
      c.closing = true;
      c.rbuf.clear();
      return;
    }

    const bool was_closing = c.channel.closing;
    ProcessResult r = engine.process_request(c.channel, *msg);
    if (c.channel.closing) c.closing = true;
    if (was_closing || r.responses.empty() || !r.faults.deliver) continue;

    Pending p;
    for (const auto& m : r.responses) {
      ldap::WireFrame f = ldap::encode(m);
      p.bytes.insert(p.bytes.end(), f.bytes.begin(), f.bytes.end());
    }
    p.messages = r.responses.size();
    p.due = Clock::now() + r.faults.delay;
    if (!c.pending.empty()) p.due = std::max(p.due, c.pending.back().due);
    c.queued_messages += p.messages;
    c.pending.push_back(std::move(p));
  }
  c.rbuf.erase(c.rbuf.begin(), c.rbuf.begin() + static_cast<std::ptrdiff_t>(pos));
  if (c.closing) c.rbuf.clear();
}

bool Server::Impl::Loop::flush(Conduit& c) {
  while (c.woff < c.wbuf.size()) {
    ssize_t n = ::send(c.fd, c.wbuf.data() + c.woff, c.wbuf.size() - c.woff, MSG_NOSIGNAL);
    if (n > 0) {
      c.woff += static_cast<std::size_t>(n);
      c.last_progress = Clock::now();
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
    return false;
  }
  c.queued_messages -= c.wbuf_messages;
  c.wbuf_messages = 0;
  c.wbuf.clear();
  c.woff = 0;
  return true;
}

void Server::Impl::Loop::pump(Conduit& c) {
  const auto now = Clock::now();
  const bool had_backlog = c.woff < c.wbuf.size();
  while (!c.pending.empty() && c.pending.front().due <= now) {
    Pending& p = c.pending.front();
    if (c.wbuf.empty()) {
      c.wbuf = std::move(p.bytes);
    } else {
      c.wbuf.insert(c.wbuf.end(), p.bytes.begin(), p.bytes.end());
    }
    c.wbuf_messages += p.messages;
    c.pending.pop_front();
  }
  if (!flush(c)) {
    destroy(c);
    return;
  }
  const bool blocked = c.woff < c.wbuf.size();
  if (blocked && !had_backlog)
    timers.push({c.last_progress + owner->options.write_timeout, Timer::Kind::WriteCheck, c.id});
  if (!c.pending.empty()) timers.push({c.pending.front().due, Timer::Kind::Pump, c.id});

  // Backpressure relieved: resume any frames left in the buffer.
  if (!c.closing && !c.rbuf.empty() && c.queued_messages < owner->options.outbound_queue_limit &&
      c.pending.empty() && !blocked) {
    process_frames(c);
    if (!c.pending.empty()) {
      pump(c);
      return;
    }
  }

  if (c.closing && c.pending.empty() && !blocked) {
    destroy(c);
    return;
  }
  update_interest(c);
}

void Server::Impl::Loop::update_interest(Conduit& c) {
  const bool want_read = !c.peer_closed && !c.closing &&
                         c.queued_messages < owner->options.outbound_queue_limit;
  const bool want_write = c.woff < c.wbuf.size();
  if (want_read == c.reading && want_write == c.writing) return;
  epoll_event ev{};
  ev.events = (want_read ? (EPOLLIN | EPOLLRDHUP) : 0u) | (want_write ? EPOLLOUT : 0u);
  ev.data.u64 = c.id;
  ::epoll_ctl(epfd, EPOLL_CTL_MOD, c.fd, &ev);
  c.reading = want_read;
  c.writing = want_write;
}

void Server::Impl::Loop::destroy(Conduit& c) {
  ::epoll_ctl(epfd, EPOLL_CTL_DEL, c.fd, nullptr);
  ::close(c.fd);
  owner->engine->close_channel(c.channel);
  owner->open_conduits.fetch_sub(1);
  conduits.erase(c.id);
}

std::string to_string(const NativeBinding& b) {
  const bool v6 = b.address.find(':') != std::string::npos;
  return b.endpoint_id + "@" + (v6 ? "[" + b.address + "]" : b.address) + ":" + std::to_string(b.port);
}

std::size_t raise_fd_limit(std::size_t wanted) {
  rlimit rl{};
  if (::getrlimit(RLIMIT_NOFILE, &rl) != 0) return 0;
  if (rl.rlim_cur < wanted) {
    rlimit want = rl;
    want.rlim_cur = (rl.rlim_max == RLIM_INFINITY) ? wanted : std::min<rlim_t>(wanted, rl.rlim_max);
    if (::setrlimit(RLIMIT_NOFILE, &want) == 0) rl = want;
  }
  return rl.rlim_cur == RLIM_INFINITY ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(rl.rlim_cur);
}

Server::Server(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Server::~Server() { stop(); }
void Server::stop() {
  if (impl_) impl_->shutdown();
}
std::size_t Server::listener_count() const noexcept { return impl_->listeners.size(); }
std::size_t Server::open_conduits() const noexcept { return impl_->open_conduits.load(); }
std::size_t Server::fd_budget() const noexcept { return impl_->fd_budget; }

std::unique_ptr<Server> Server::start(Engine& engine, const std::vector<NativeBinding>& bindings,
                                      const NetworkOptions& options) {
  auto impl = std::make_unique<Impl>();
  impl->engine = &engine;
  impl->options = options;

  // Validation before anything is bound.
  std::set<std::pair<std::string, std::uint16_t>> seen;
  std::vector<std::size_t> endpoint_of(bindings.size());
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    const auto& b = bindings[i];
    sockaddr_storage ss{};
    socklen_t len = 0;
    if (!parse_address(b.address, b.port, ss, len))
      throw NetworkError(NetworkError::Kind::InvalidBinding, "not a numeric IP address: " + to_string(b), b);
    auto ep = engine.find_endpoint(b.endpoint_id);
    if (!ep) throw NetworkError(NetworkError::Kind::InvalidBinding, "unknown endpoint in binding " + to_string(b), b);
    endpoint_of[i] = *ep;
    if (!seen.emplace(b.address, b.port).second)
      throw NetworkError(NetworkError::Kind::DuplicateBinding, "duplicate address/port in binding " + to_string(b), b);
  }

  impl->fd_budget = bindings.size() + options.expected_peak_connections + kFdSlack;
  const std::size_t limit = raise_fd_limit(impl->fd_budget);
  if (limit < impl->fd_budget)
    throw NetworkError(NetworkError::Kind::FdLimit,
                       "descriptor budget " + std::to_string(impl->fd_budget) + " (" +
                           std::to_string(bindings.size()) + " listeners + " +
                           std::to_string(options.expected_peak_connections) +
                           " connections + slack) exceeds the open-file limit " + std::to_string(limit) +
                           "; raise it with `ulimit -n " + std::to_string(impl->fd_budget) + "`");

  for (std::size_t i = 0; i < bindings.size(); ++i) {
    const auto& b = bindings[i];
    sockaddr_storage ss{};
    socklen_t len = 0;
    parse_address(b.address, b.port, ss, len);
    int fd = ::socket(ss.ss_family, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
    auto fail = [&](int err, const char* what) {
      if (fd >= 0) ::close(fd);
      NetworkError::Kind kind = NetworkError::Kind::System;
      std::string hint;
      if (err == EADDRINUSE) kind = NetworkError::Kind::AddressInUse;
      if (err == EACCES || err == EPERM) {
        kind = NetworkError::Kind::PermissionDenied;
        hint = " (ports below 1024 need privileges)";
      }
      if (err == EMFILE || err == ENFILE) {
        kind = NetworkError::Kind::FdLimit;
        hint = " after " + std::to_string(i) + " listeners; raise the limit with `ulimit -n " +
               std::to_string(impl->fd_budget) + "`";
      }
      if (err == EADDRNOTAVAIL) hint = " (address is not assigned to this host)";
      throw NetworkError(kind, std::string(what) + " " + to_string(b) + ": " + errno_text(err) + hint, b);
    };
    if (fd < 0) fail(errno, "socket for");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&ss), len) != 0) fail(errno, "bind");
    if (::listen(fd, SOMAXCONN) != 0) fail(errno, "listen");
    impl->listeners.push_back({fd, endpoint_of[i], b});
  }

  std::size_t k = options.io_threads ? options.io_threads : std::max(1u, std::thread::hardware_concurrency());
  k = std::max<std::size_t>(1, std::min(k, std::max<std::size_t>(1, bindings.size())));
  for (std::size_t i = 0; i < k; ++i) {
    auto loop = std::make_unique<Impl::Loop>();
    loop->owner = impl.get();
    loop->epfd = ::epoll_create1(EPOLL_CLOEXEC);
    loop->wakefd = ::eventfd(0, EFD_NONBLOCK | EFD_CLOEXEC);
    if (loop->epfd < 0 || loop->wakefd < 0) {
      const int err = errno;
      impl->loops.push_back(std::move(loop));
      throw NetworkError(NetworkError::Kind::System, "epoll setup: " + errno_text(err));
    }
    epoll_event ev{};
    ev.events = EPOLLIN;
    ev.data.u64 = kWakeTag;
    ::epoll_ctl(loop->epfd, EPOLL_CTL_ADD, loop->wakefd, &ev);
    impl->loops.push_back(std::move(loop));
  }
  for (std::size_t i = 0; i < impl->listeners.size(); ++i) {
    auto& loop = *impl->loops[i % k];
    loop.listeners.push_back(i);
    epoll_event ev{};
    ev.events = EPOLLIN;
    ev.data.u64 = kListenerTag | i;
    if (::epoll_ctl(loop.epfd, EPOLL_CTL_ADD, impl->listeners[i].fd, &ev) != 0)
      throw NetworkError(NetworkError::Kind::System, "epoll registration: " + errno_text(errno),
                         impl->listeners[i].binding);
  }
  for (auto& loop : impl->loops) loop->thread = std::thread([l = loop.get()] { l->run(); });
  return std::unique_ptr<Server>(new Server(std::move(impl)));
}

}  // namespace svcemu::net
