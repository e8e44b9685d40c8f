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

#ifndef DPDICE_HASH_HPP_
#define DPDICE_HASH_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpdice {

using uint128_t = unsigned __int128;

/// Keyed-hash session key. All parties of a session must hold the same key.
/// The first 16 bytes seed the PRF state; any additional bytes are absorbed
/// as a message prefix, so the hash of an element e is a function of
/// key_bytes || e exactly.
struct HashKey {
  std::vector<uint8_t> key_bytes;

  explicit HashKey(std::vector<uint8_t> bytes) : key_bytes(std::move(bytes)) {
    if (key_bytes.size() < 16) {
      throw std::invalid_argument("HashKey requires at least 16 bytes");
    }
  }

  static HashKey from_seed(uint64_t seed);
};

/// Trailing-zero count of a fixed-width bit string. An all-zero input
/// returns the full width.
inline int rho(uint128_t bits, int width) {
  if (bits == 0) return width;
  const auto lo = uint64_t(bits);
  if (lo != 0) return std::countr_zero(lo);
  return 64 + std::countr_zero(uint64_t(bits >> 64));
}

namespace detail {

// SipHash-1-3 with 128-bit output. Deterministic and platform-independent:
// message bytes are absorbed little-endian, so the same (key, message)
// yields the same bits everywhere.
struct SipState {
  uint64_t v0, v1, v2, v3;

  explicit SipState(const uint8_t key[16]) {
    uint64_t k0, k1;
    std::memcpy(&k0, key, 8);
    std::memcpy(&k1, key + 8, 8);
    v0 = k0 ^ 0x736f6d6570736575ULL;
    v1 = k1 ^ 0x646f72616e646f6dULL;
    v2 = k0 ^ 0x6c7967656e657261ULL;
    v3 = k1 ^ 0x7465646279746573ULL;
    v1 ^= 0xee;  // 128-bit output mode
  }

  static uint64_t rotl(uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

  void round() {
    v0 += v1;
    v1 = rotl(v1, 13);
    v1 ^= v0;
    v0 = rotl(v0, 32);
    v2 += v3;
    v3 = rotl(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = rotl(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = rotl(v1, 17);
    v1 ^= v2;
    v2 = rotl(v2, 32);
  }

  void absorb(uint64_t m) {
    v3 ^= m;
    round();
    v0 ^= m;
  }
};

// Hashes msg_prefix || msg under the 16-byte sip key. Returns the full
// 128-bit digest (low word first).
uint128_t siphash128(const uint8_t key[16], std::span<const uint8_t> prefix,
                     std::span<const uint8_t> msg);

// Fast path: only the low 64 bits of the 128-bit digest.
uint64_t siphash128_lo(const uint8_t key[16], std::span<const uint8_t> prefix,
                       std::span<const uint8_t> msg);

}  // namespace detail

/// PRF-quality keyed hash of key || element, truncated to the low nbits.
/// nbits must be in [1, 128].
uint128_t keyed_hash(const HashKey& key, std::span<const uint8_t> element,
                     int nbits);

/// Row-indexed variant used by the FM sketch: hashes
/// key || i (4-byte big-endian) || element.
uint64_t keyed_hash_indexed(const HashKey& key, uint32_t index,
                            std::span<const uint8_t> element, int nbits);

/// out[i-1] = keyed_hash_indexed(key, i, element as 8 LE bytes, nbits) for
/// i = 1..count. Bit-identical to the scalar routine; dispatches to a wide
/// SIMD kernel when the key is exactly 16 bytes and the CPU allows.
void keyed_hash_indexed_batch(const HashKey& key, uint64_t element,
                              uint32_t count, int nbits, uint64_t* out);

/// Fused bit-array update: rows[i-1] |= 1 << rho(h_i, nbits) where h_i is the
/// indexed hash of `element` masked to nbits. Avoids materialising the hash
/// batch; nbits must be in [0, 63].
void fm_update_rows(const HashKey& key, uint64_t element, uint32_t count,
                    int nbits, uint64_t* rows);

}  // namespace dpdice

#endif  // DPDICE_HASH_HPP_
