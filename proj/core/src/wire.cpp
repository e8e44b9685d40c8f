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

#include "dpdice/wire.hpp"

#include <random>

namespace dpdice::wire {

SessionId SessionId::from_seed(uint64_t seed) {
  std::mt19937_64 rng(seed);
  SessionId id;
  for (int i = 0; i < 2; ++i) {
    uint64_t word = rng();
    for (int b = 0; b < 8; ++b) id.bytes[8 * i + b] = uint8_t(word >> (8 * b));
  }
  return id;
}

std::string SessionId::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(32);
  for (uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

std::vector<uint8_t> encode_frame(const WireMessage& msg) {
  const uint32_t body_len = uint32_t(1 + 16 + 2 + 2 + msg.payload.size());
  std::vector<uint8_t> frame;
  frame.reserve(4 + body_len);
  for (int i = 0; i < 4; ++i) frame.push_back(uint8_t(body_len >> (8 * i)));
  frame.push_back(uint8_t(msg.type));
  frame.insert(frame.end(), msg.session.bytes.begin(), msg.session.bytes.end());
  frame.push_back(uint8_t(msg.sender));
  frame.push_back(uint8_t(msg.sender >> 8));
  frame.push_back(uint8_t(msg.receiver));
  frame.push_back(uint8_t(msg.receiver >> 8));
  frame.insert(frame.end(), msg.payload.begin(), msg.payload.end());
  return frame;
}

WireMessage decode_body(std::span<const uint8_t> body) {
  if (body.size() < 1 + 16 + 2 + 2) {
    throw std::runtime_error("wire frame too short");
  }
  WireMessage msg;
  msg.type = MsgType(body[0]);
  if (uint8_t(msg.type) < 1 || uint8_t(msg.type) > 7) {
    throw std::runtime_error("unknown wire message type");
  }
  std::copy(body.begin() + 1, body.begin() + 17, msg.session.bytes.begin());
  msg.sender = uint16_t(body[17]) | uint16_t(body[18]) << 8;
  msg.receiver = uint16_t(body[19]) | uint16_t(body[20]) << 8;
  msg.payload.assign(body.begin() + 21, body.end());
  return msg;
}

}  // namespace dpdice::wire
