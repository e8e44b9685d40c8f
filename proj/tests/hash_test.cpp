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

#include <bit>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "dpdice/hash.hpp"

namespace {

using namespace dpdice;

// Independent SipHash-1-3 (128-bit output) written straight from the
// algorithm description; the library implementation must match it bit for
// bit on arbitrary messages.
struct RefSip {
  uint64_t v0, v1, v2, v3;

  static uint64_t rotl(uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

  void round() {
    v0 += v1;
    v1 = rotl(v1, 13) ^ v0;
    v0 = rotl(v0, 32);
    v2 += v3;
    v3 = rotl(v3, 16) ^ v2;
    v0 += v3;
    v3 = rotl(v3, 21) ^ v0;
    v2 += v1;
    v1 = rotl(v1, 17) ^ v2;
    v2 = rotl(v2, 32);
  }
};

uint128_t ref_siphash128(const uint8_t key[16],
                         const std::vector<uint8_t>& msg) {
  uint64_t k0, k1;
  std::memcpy(&k0, key, 8);
  std::memcpy(&k1, key + 8, 8);
  RefSip s{k0 ^ 0x736f6d6570736575ULL, k1 ^ 0x646f72616e646f6dULL ^ 0xee,
           k0 ^ 0x6c7967656e657261ULL, k1 ^ 0x7465646279746573ULL};
  std::vector<uint8_t> padded = msg;
  while (padded.size() % 8 != 7) padded.push_back(0);
  padded.push_back(uint8_t(msg.size()));
  for (size_t off = 0; off < padded.size(); off += 8) {
    uint64_t m;
    std::memcpy(&m, padded.data() + off, 8);
    s.v3 ^= m;
    s.round();
    s.v0 ^= m;
  }
  s.v2 ^= 0xee;
  s.round();
  s.round();
  s.round();
  const uint64_t lo = s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
  s.v1 ^= 0xdd;
  s.round();
  s.round();
  s.round();
  const uint64_t hi = s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
  return (uint128_t(hi) << 64) | lo;
}

}  // namespace

TEST_CASE("keyed_hash matches an independent SipHash-1-3 oracle") {
  std::mt19937_64 rng(101);
  HashKey key = HashKey::from_seed(42);
  for (size_t len : {size_t(0), size_t(1), size_t(7), size_t(8), size_t(9),
                     size_t(12), size_t(31), size_t(64)}) {
    std::vector<uint8_t> msg(len);
    for (auto& b : msg) b = uint8_t(rng());
    const uint128_t want = ref_siphash128(key.key_bytes.data(), msg);
    CHECK(keyed_hash(key, msg, 128) == want);
    CHECK(keyed_hash(key, msg, 64) == uint64_t(want));
    CHECK(keyed_hash(key, msg, 13) == (uint64_t(want) & 0x1fff));
  }
}

TEST_CASE("keyed_hash frozen vectors") {
  HashKey key = HashKey::from_seed(42);
  const std::vector<uint8_t> want_key = {0xd6, 0xe2, 0xe5, 0x6e, 0x7d, 0xdf,
                                         0x51, 0xc1, 0xa8, 0x02, 0x25, 0xb9,
                                         0xb9, 0x8f, 0x97, 0xa3};
  CHECK(key.key_bytes == want_key);

  const uint8_t hello[5] = {'h', 'e', 'l', 'l', 'o'};
  const uint128_t h = keyed_hash(key, hello, 128);
  CHECK(uint64_t(h >> 64) == 0x12762113aa61d2d4ULL);
  CHECK(uint64_t(h) == 0xaa183443caa9b52bULL);

  const uint128_t he = keyed_hash(key, {}, 128);
  CHECK(uint64_t(he >> 64) == 0xd676552baf6fae4bULL);
  CHECK(uint64_t(he) == 0xa07755974bd4abdeULL);

  const uint8_t e8[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(keyed_hash_indexed(key, 1, e8, 64) == 0x2310045a9a1a270fULL);
  CHECK(keyed_hash_indexed(key, 2, e8, 64) == 0xf55249881572cbe3ULL);
  CHECK(keyed_hash_indexed(key, 4096, e8, 64) == 0x80c3cc3fcb63dabcULL);
}

TEST_CASE("keyed_hash_indexed prepends the big-endian index") {
  HashKey key = HashKey::from_seed(7);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const uint32_t index = uint32_t(rng());
    std::vector<uint8_t> elem(rng() % 24);
    for (auto& b : elem) b = uint8_t(rng());
    std::vector<uint8_t> msg = {uint8_t(index >> 24), uint8_t(index >> 16),
                                uint8_t(index >> 8), uint8_t(index)};
    msg.insert(msg.end(), elem.begin(), elem.end());
    const uint128_t want = ref_siphash128(key.key_bytes.data(), msg);
    CHECK(keyed_hash_indexed(key, index, elem, 64) == uint64_t(want));
  }
}

TEST_CASE("rho counts trailing zeros with an all-zero clamp") {
  CHECK(rho(0, 9) == 9);
  CHECK(rho(1, 9) == 0);
  CHECK(rho(uint128_t(1) << 64, 128) == 64);
  CHECK(rho(uint128_t(1) << 100, 128) == 100);
  CHECK(rho(0b101000, 32) == 3);
}

TEST_CASE("indexed batch is bit-identical to the scalar routine") {
  std::mt19937_64 rng(5);
  HashKey key = HashKey::from_seed(rng());
  for (uint32_t count : {1u, 15u, 16u, 17u, 100u, 4096u}) {
    const uint64_t element = rng();
    uint8_t e8[8];
    for (int b = 0; b < 8; ++b) e8[b] = uint8_t(element >> (8 * b));
    std::vector<uint64_t> got(count);
    keyed_hash_indexed_batch(key, element, count, 17, got.data());
    for (uint32_t i = 1; i <= count; ++i) {
      REQUIRE(got[i - 1] == keyed_hash_indexed(key, i, e8, 17));
    }
  }
}

TEST_CASE("fm_update_rows matches rho of each row hash") {
  std::mt19937_64 rng(6);
  HashKey key = HashKey::from_seed(rng());
  for (uint32_t count : {1u, 16u, 37u, 512u}) {
    const int nbits = 1 + int(rng() % 60);
    std::vector<uint64_t> rows(count, 0), want(count, 0);
    for (int reps = 0; reps < 20; ++reps) {
      const uint64_t element = rng();
      uint8_t e8[8];
      for (int b = 0; b < 8; ++b) e8[b] = uint8_t(element >> (8 * b));
      fm_update_rows(key, element, count, nbits, rows.data());
      for (uint32_t i = 1; i <= count; ++i) {
        const uint64_t h = keyed_hash_indexed(key, i, e8, nbits);
        want[i - 1] |= uint64_t(1) << rho(h, nbits);
      }
    }
    REQUIRE(rows == want);
  }
}
