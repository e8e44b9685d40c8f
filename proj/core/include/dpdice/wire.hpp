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

#ifndef DPDICE_WIRE_HPP_
#define DPDICE_WIRE_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpdice/field.hpp"

namespace dpdice::wire {

enum class MsgType : uint8_t {
  kMaskShare = 1,
  kMaskedInput = 2,
  kRevealShare = 3,
  kMacSigmaCommit = 4,
  kMacSigmaOpen = 5,
  kAbort = 6,
  kResult = 7,
};

struct SessionId {
  std::array<uint8_t, 16> bytes{};

  friend bool operator==(const SessionId&, const SessionId&) = default;

  static SessionId from_seed(uint64_t seed);
  std::string hex() const;
};

/// One framed protocol message. On the wire:
///   u32 LE body length | u8 type | 16B session | u16 LE sender |
///   u16 LE receiver | payload
/// The length counts everything after itself.
struct WireMessage {
  MsgType type = MsgType::kAbort;
  SessionId session;
  uint16_t sender = 0;
  uint16_t receiver = 0;
  std::vector<uint8_t> payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

std::vector<uint8_t> encode_frame(const WireMessage& msg);

/// Parses a frame body (everything after the 4-byte length prefix).
WireMessage decode_body(std::span<const uint8_t> body);

/// Little-endian payload builder.
class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    buf_.push_back(uint8_t(v));
    buf_.push_back(uint8_t(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void fe(Fe x) {
    for (int i = 0; i < 16; ++i) buf_.push_back(uint8_t(x.v >> (8 * i)));
  }
  void raw(std::span<const uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(data_[pos_]) | uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
    pos_ += 8;
    return v;
  }
  Fe fe() {
    need(16);
    uint128_t v = 0;
    for (int i = 15; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
    pos_ += 16;
    return Fe{v};
  }
  std::span<const uint8_t> raw(size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(size_t n) const {
    if (pos_ + n > data_.size()) {
      throw std::runtime_error("wire payload truncated");
    }
  }
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace dpdice::wire

#endif  // DPDICE_WIRE_HPP_
