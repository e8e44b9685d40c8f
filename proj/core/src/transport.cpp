/*
 * Copyright 2026 The dpdice Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dpdice/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace dpdice::transport {

// ----- in-memory hub -----

struct MemoryHub::State {
  uint16_t party_count;
  std::mutex mutex;
  std::condition_variable cv;
  bool closed = false;
  std::string close_reason;
  // queues[sender * party_count + receiver]
  std::vector<std::deque<wire::WireMessage>> queues;
};

namespace {

class MemoryTransportImpl : public Transport {
 public:
  MemoryTransportImpl(std::shared_ptr<MemoryHub::State> state, uint16_t self)
      : state_(std::move(state)), self_(self) {}

  void send(const wire::WireMessage& msg) override {
    // Frame size is what TCP would carry; counted for parity across
    // transports.
    const size_t frame_bytes = 4 + 1 + 16 + 2 + 2 + msg.payload.size();
    {
      std::lock_guard lock(state_->mutex);
      if (state_->closed) {
        throw TransportError("send on closed session: " +
                             state_->close_reason);
      }
      if (msg.receiver >= state_->party_count) {
        throw TransportError("send to unknown party");
      }
      state_->queues[size_t(self_) * state_->party_count + msg.receiver]
          .push_back(msg);
    }
    state_->cv.notify_all();
    count_sent(frame_bytes);
  }

  wire::WireMessage recv_from(uint16_t sender) override {
    std::unique_lock lock(state_->mutex);
    auto& queue =
        state_->queues[size_t(sender) * state_->party_count + self_];
    state_->cv.wait(lock,
                    [&] { return state_->closed || !queue.empty(); });
    if (queue.empty()) {
      throw TransportError("session closed: " + state_->close_reason);
    }
    wire::WireMessage msg = std::move(queue.front());
    queue.pop_front();
    lock.unlock();
    count_received(4 + 1 + 16 + 2 + 2 + msg.payload.size());
    return msg;
  }

 private:
  std::shared_ptr<MemoryHub::State> state_;
  uint16_t self_;
};

}  // namespace

MemoryHub::MemoryHub(uint16_t party_count) : state_(new State) {
  state_->party_count = party_count;
  state_->queues.resize(size_t(party_count) * party_count);
}

uint16_t MemoryHub::party_count() const { return state_->party_count; }

std::unique_ptr<Transport> MemoryHub::endpoint(uint16_t party) {
  if (party >= state_->party_count) {
    throw TransportError("endpoint id out of range");
  }
  return std::make_unique<MemoryTransportImpl>(state_, party);
}

void MemoryHub::close(const std::string& reason) {
  {
    std::lock_guard lock(state_->mutex);
    if (state_->closed) return;
    state_->closed = true;
    state_->close_reason = reason;
  }
  state_->cv.notify_all();
}

// ----- TCP mesh -----

struct TcpTransport::PeerChannel {
  int fd = -1;
  std::mutex write_mutex;
  std::mutex queue_mutex;
  std::condition_variable cv;
  std::deque<wire::WireMessage> queue;
  bool failed = false;
  std::string fail_reason;
};

namespace {

void write_all(int fd, const uint8_t* data, size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n <= 0) throw TransportError("tcp write failed");
    data += size_t(n);
    len -= size_t(n);
  }
}

bool read_all(int fd, uint8_t* data, size_t len) {
  while (len > 0) {
    ssize_t n = ::recv(fd, data, len, 0);
    if (n == 0) return false;  // orderly shutdown
    if (n < 0) throw TransportError("tcp read failed");
    data += size_t(n);
    len -= size_t(n);
  }
  return true;
}

std::pair<std::string, uint16_t> split_host_port(const std::string& ep) {
  auto colon = ep.rfind(':');
  if (colon == std::string::npos) {
    throw TransportError("endpoint must be host:port, got " + ep);
  }
  return {ep.substr(0, colon), uint16_t(std::stoi(ep.substr(colon + 1)))};
}

int listen_on(uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("bind failed on port " + std::to_string(port));
  }
  if (::listen(fd, 64) != 0) {
    ::close(fd);
    throw TransportError("listen failed");
  }
  return fd;
}

int dial(const std::string& host, uint16_t port,
         std::chrono::steady_clock::time_point deadline) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints,
                    &result) != 0) {
    throw TransportError("cannot resolve " + host);
  }
  // Peers may not be listening yet; retry until the mesh deadline.
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
      ::freeaddrinfo(result);
      throw TransportError("socket() failed");
    }
    if (::connect(fd, result->ai_addr, result->ai_addrlen) == 0) {
      ::freeaddrinfo(result);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return fd;
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      ::freeaddrinfo(result);
      throw TransportError("connect deadline exceeded for " + host + ":" +
                           std::to_string(port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace

TcpTransport::TcpTransport(uint16_t self, uint16_t party_count)
    : self_(self) {
  peers_.resize(party_count);
  for (uint16_t i = 0; i < party_count; ++i) {
    if (i != self) peers_[i] = std::make_unique<PeerChannel>();
  }
}

std::unique_ptr<TcpTransport> TcpTransport::connect_mesh(
    uint16_t self, const std::vector<std::string>& endpoints,
    int deadline_ms) {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(deadline_ms);
  const auto count = uint16_t(endpoints.size());
  std::unique_ptr<TcpTransport> t(new TcpTransport(self, count));

  auto [self_host, self_port] = split_host_port(endpoints[self]);
  (void)self_host;
  int listener = -1;
  if (self + 1 < count) listener = listen_on(self_port);

  // Dial every lower-numbered peer; announce who we are.
  for (uint16_t peer = 0; peer < self; ++peer) {
    auto [host, port] = split_host_port(endpoints[peer]);
    int fd = dial(host, port, deadline);
    uint8_t hello[2] = {uint8_t(self), uint8_t(self >> 8)};
    write_all(fd, hello, 2);
    t->peers_[peer]->fd = fd;
  }
  // Accept every higher-numbered peer.
  for (uint16_t pending = uint16_t(count - self - 1); pending > 0;
       --pending) {
    int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      ::close(listener);
      throw TransportError("accept failed");
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    uint8_t hello[2];
    if (!read_all(fd, hello, 2)) throw TransportError("peer hello missing");
    auto peer = uint16_t(uint16_t(hello[0]) | uint16_t(hello[1]) << 8);
    if (peer <= self || peer >= count || t->peers_[peer]->fd != -1) {
      throw TransportError("unexpected peer hello");
    }
    t->peers_[peer]->fd = fd;
  }
  if (listener != -1) ::close(listener);

  for (uint16_t peer = 0; peer < count; ++peer) {
    if (peer != self) t->start_reader(peer, t->peers_[peer]->fd);
  }
  return t;
}

void TcpTransport::start_reader(uint16_t peer, int fd) {
  PeerChannel* channel = peers_[peer].get();
  readers_.emplace_back([this, channel, fd] {
    std::string reason = "peer disconnected";
    try {
      for (;;) {
        uint8_t len_bytes[4];
        if (!read_all(fd, len_bytes, 4)) break;
        uint32_t len = 0;
        for (int i = 3; i >= 0; --i) len = (len << 8) | len_bytes[i];
        if (len > (64u << 20)) throw TransportError("oversized frame");
        std::vector<uint8_t> body(len);
        if (!read_all(fd, body.data(), len)) {
          throw TransportError("truncated frame");
        }
        wire::WireMessage msg = wire::decode_body(body);
        count_received(4 + body.size());
        {
          std::lock_guard lock(channel->queue_mutex);
          channel->queue.push_back(std::move(msg));
        }
        channel->cv.notify_all();
      }
    } catch (const std::exception& e) {
      reason = e.what();
    }
    {
      std::lock_guard lock(channel->queue_mutex);
      channel->failed = true;
      channel->fail_reason = reason;
    }
    channel->cv.notify_all();
  });
}

TcpTransport::~TcpTransport() {
  for (auto& peer : peers_) {
    if (peer && peer->fd != -1) ::shutdown(peer->fd, SHUT_RDWR);
  }
  for (auto& reader : readers_) {
    if (reader.joinable()) reader.join();
  }
  for (auto& peer : peers_) {
    if (peer && peer->fd != -1) ::close(peer->fd);
  }
}

void TcpTransport::send(const wire::WireMessage& msg) {
  if (msg.receiver >= peers_.size() || msg.receiver == self_ ||
      !peers_[msg.receiver]) {
    throw TransportError("send to unknown party");
  }
  PeerChannel* channel = peers_[msg.receiver].get();
  std::vector<uint8_t> frame = wire::encode_frame(msg);
  {
    std::lock_guard lock(channel->write_mutex);
    write_all(channel->fd, frame.data(), frame.size());
  }
  count_sent(frame.size());
}

wire::WireMessage TcpTransport::recv_from(uint16_t sender) {
  if (sender >= peers_.size() || sender == self_ || !peers_[sender]) {
    throw TransportError("recv from unknown party");
  }
  PeerChannel* channel = peers_[sender].get();
  std::unique_lock lock(channel->queue_mutex);
  channel->cv.wait(lock,
                   [&] { return channel->failed || !channel->queue.empty(); });
  if (channel->queue.empty()) {
    throw TransportError("connection lost: " + channel->fail_reason);
  }
  wire::WireMessage msg = std::move(channel->queue.front());
  channel->queue.pop_front();
  return msg;
}

}  // namespace dpdice::transport
