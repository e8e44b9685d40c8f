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

#include <random>
#include <vector>

#include "doctest.h"
#include "dpdice/wire.hpp"

namespace {

using namespace dpdice;
using namespace dpdice::wire;

}  // namespace

TEST_CASE("frame layout is pinned byte for byte") {
  WireMessage msg;
  msg.type = MsgType::kRevealShare;
  msg.session = SessionId::from_seed(1);
  msg.sender = 3;
  msg.receiver = 0x1234;
  msg.payload = {0xaa, 0xbb};

  const auto frame = encode_frame(msg);
  REQUIRE(frame.size() == 4 + 1 + 16 + 2 + 2 + 2);
  // u32 LE length counts everything after itself.
  CHECK(frame[0] == 23);
  CHECK(frame[1] == 0);
  CHECK(frame[2] == 0);
  CHECK(frame[3] == 0);
  CHECK(frame[4] == uint8_t(MsgType::kRevealShare));
  for (int i = 0; i < 16; ++i) REQUIRE(frame[5 + i] == msg.session.bytes[i]);
  CHECK(frame[21] == 3);  // sender LE
  CHECK(frame[22] == 0);
  CHECK(frame[23] == 0x34);  // receiver LE
  CHECK(frame[24] == 0x12);
  CHECK(frame[25] == 0xaa);
  CHECK(frame[26] == 0xbb);
}

TEST_CASE("encode/decode round-trips every message type") {
  std::mt19937_64 rng(5);
  for (uint8_t t = 1; t <= 7; ++t) {
    WireMessage msg;
    msg.type = MsgType(t);
    msg.session = SessionId::from_seed(rng());
    msg.sender = uint16_t(rng());
    msg.receiver = uint16_t(rng());
    msg.payload.resize(rng() % 100);
    for (auto& b : msg.payload) b = uint8_t(rng());
    const auto frame = encode_frame(msg);
    const WireMessage back =
        decode_body(std::span(frame).subspan(4));
    REQUIRE(back == msg);
  }
}

TEST_CASE("decode_body rejects malformed frames") {
  WireMessage msg;
  msg.type = MsgType::kAbort;
  auto frame = encode_frame(msg);
  // Unknown type byte.
  auto bad_type = frame;
  bad_type[4] = 0;
  CHECK_THROWS(decode_body(std::span(bad_type).subspan(4)));
  bad_type[4] = 8;
  CHECK_THROWS(decode_body(std::span(bad_type).subspan(4)));
  // Body shorter than the fixed header.
  std::vector<uint8_t> tiny(20, 0);
  CHECK_THROWS(decode_body(tiny));
}

TEST_CASE("session ids are deterministic and distinct") {
  CHECK(SessionId::from_seed(7) == SessionId::from_seed(7));
  CHECK(!(SessionId::from_seed(7) == SessionId::from_seed(8)));
  CHECK(SessionId::from_seed(7).hex().size() == 32);
}

TEST_CASE("writer/reader agree on little-endian scalars") {
  Writer w;
  w.u8(0x12);
  w.u16(0x3456);
  w.u32(0x789abcde);
  w.u64(0x0102030405060708ULL);
  w.fe(Fe{(uint128_t(0xff) << 64) | 42});
  const uint8_t raw_bytes[3] = {9, 8, 7};
  w.raw(raw_bytes);
  const auto buf = w.take();
  REQUIRE(buf.size() == 1 + 2 + 4 + 8 + 16 + 3);
  CHECK(buf[1] == 0x56);  // u16 low byte first

  Reader r(buf);
  CHECK(r.u8() == 0x12);
  CHECK(r.u16() == 0x3456);
  CHECK(r.u32() == 0x789abcde);
  CHECK(r.u64() == 0x0102030405060708ULL);
  CHECK(r.fe() == Fe{(uint128_t(0xff) << 64) | 42});
  const auto tail = r.raw(3);
  CHECK(tail[0] == 9);
  CHECK(r.done());
  CHECK_THROWS(r.u8());
}
