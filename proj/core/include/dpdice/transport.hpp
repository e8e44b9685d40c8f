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

#ifndef DPDICE_TRANSPORT_HPP_
#define DPDICE_TRANSPORT_HPP_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dpdice/wire.hpp"

namespace dpdice::transport {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhaseStats {
  uint64_t bytes_sent = 0;
  uint64_t bytes_received = 0;
  uint64_t messages_sent = 0;
  uint64_t messages_received = 0;
};

struct TransportStats {
  PhaseStats total;
  std::map<std::string, PhaseStats> per_phase;
};

/// Reliable ordered point-to-point message channel for one party. recv_from
/// blocks. Implementations count every framed byte against the phase label
/// current at send/receive time.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void send(const wire::WireMessage& msg) = 0;
  virtual wire::WireMessage recv_from(uint16_t sender) = 0;

  void broadcast(wire::WireMessage msg, const std::vector<uint16_t>& to) {
    for (uint16_t r : to) {
      msg.receiver = r;
      send(msg);
    }
  }

  void set_phase(std::string phase) {
    std::lock_guard lock(stats_mutex_);
    phase_ = std::move(phase);
  }
  TransportStats stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
  }

 protected:
  void count_sent(size_t frame_bytes) {
    std::lock_guard lock(stats_mutex_);
    stats_.total.bytes_sent += frame_bytes;
    stats_.total.messages_sent += 1;
    PhaseStats& p = stats_.per_phase[phase_];
    p.bytes_sent += frame_bytes;
    p.messages_sent += 1;
  }
  void count_received(size_t frame_bytes) {
    std::lock_guard lock(stats_mutex_);
    stats_.total.bytes_received += frame_bytes;
    stats_.total.messages_received += 1;
    PhaseStats& p = stats_.per_phase[phase_];
    p.bytes_received += frame_bytes;
    p.messages_received += 1;
  }

 private:
  mutable std::mutex stats_mutex_;
  std::string phase_ = "setup";
  TransportStats stats_;
};

/// All-in-process transport: a hub owns one FIFO queue per (sender,
/// receiver) pair; endpoints share the hub. Closing the hub wakes blocked
/// receivers with a TransportError.
class MemoryHub {
 public:
  explicit MemoryHub(uint16_t party_count);

  uint16_t party_count() const;
  std::unique_ptr<Transport> endpoint(uint16_t party);

  /// Marks the session dead; every pending and future recv throws.
  void close(const std::string& reason);

  struct State;

 private:
  std::shared_ptr<State> state_;
};

/// TCP mesh transport. Every party listens on its own port; the
/// higher-numbered party dials the lower-numbered one and identifies itself
/// with a 2-byte little-endian hello. One socket per pair carries both
/// directions; a reader thread demultiplexes frames into per-sender queues.
class TcpTransport : public Transport {
 public:
  /// endpoints[i] = "host:port" for party i; blocks until the full mesh is
  /// up. deadline_ms bounds the whole setup.
  static std::unique_ptr<TcpTransport> connect_mesh(
      uint16_t self, const std::vector<std::string>& endpoints,
      int deadline_ms = 30000);

  ~TcpTransport() override;

  void send(const wire::WireMessage& msg) override;
  wire::WireMessage recv_from(uint16_t sender) override;

 private:
  TcpTransport(uint16_t self, uint16_t party_count);
  void start_reader(uint16_t peer, int fd);

  struct PeerChannel;
  uint16_t self_;
  std::vector<std::unique_ptr<PeerChannel>> peers_;
  std::vector<std::thread> readers_;
};

}  // namespace dpdice::transport

#endif  // DPDICE_TRANSPORT_HPP_
