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

#include "dpdice/hash.hpp"

#include <bit>
#include <random>

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace dpdice {
namespace detail {
namespace {

// Concatenates prefix || msg into little-endian 8-byte blocks and runs the
// SipHash-1-3 absorption. The final block carries the total length in its
// top byte, per the SipHash padding rule.
inline void absorb_all(SipState& s, std::span<const uint8_t> prefix,
                       std::span<const uint8_t> msg) {
  const size_t total = prefix.size() + msg.size();
  uint64_t block = 0;
  int fill = 0;
  auto push_byte = [&](uint8_t b) {
    block |= uint64_t(b) << (8 * fill);
    if (++fill == 8) {
      s.absorb(block);
      block = 0;
      fill = 0;
    }
  };
  for (uint8_t b : prefix) push_byte(b);
  for (uint8_t b : msg) push_byte(b);
  block |= uint64_t(total & 0xff) << 56;
  s.absorb(block);
}

}  // namespace

uint128_t siphash128(const uint8_t key[16], std::span<const uint8_t> prefix,
                     std::span<const uint8_t> msg) {
  SipState s(key);
  absorb_all(s, prefix, msg);
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

uint64_t siphash128_lo(const uint8_t key[16], std::span<const uint8_t> prefix,
                       std::span<const uint8_t> msg) {
  SipState s(key);
  absorb_all(s, prefix, msg);
  s.v2 ^= 0xee;
  s.round();
  s.round();
  s.round();
  return s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
}

}  // namespace detail

HashKey HashKey::from_seed(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> bytes(16);
  for (int i = 0; i < 2; ++i) {
    uint64_t word = rng();
    std::memcpy(bytes.data() + 8 * i, &word, 8);
  }
  return HashKey(std::move(bytes));
}

uint128_t keyed_hash(const HashKey& key, std::span<const uint8_t> element,
                     int nbits) {
  if (nbits < 1 || nbits > 128) {
    throw std::invalid_argument("keyed_hash: nbits out of range");
  }
  std::span<const uint8_t> tail(key.key_bytes.data() + 16,
                                key.key_bytes.size() - 16);
  uint128_t h;
  if (nbits <= 64) {
    h = detail::siphash128_lo(key.key_bytes.data(), tail, element);
  } else {
    h = detail::siphash128(key.key_bytes.data(), tail, element);
  }
  if (nbits == 128) return h;
  return h & ((uint128_t(1) << nbits) - 1);
}

uint64_t keyed_hash_indexed(const HashKey& key, uint32_t index,
                            std::span<const uint8_t> element, int nbits) {
  if (nbits < 1 || nbits > 64) {
    throw std::invalid_argument("keyed_hash_indexed: nbits out of range");
  }
  uint8_t prefix_buf[4 + 64];
  const size_t tail_len = key.key_bytes.size() - 16;
  if (tail_len > 64) {
    throw std::invalid_argument("key tail longer than supported");
  }
  std::memcpy(prefix_buf, key.key_bytes.data() + 16, tail_len);
  prefix_buf[tail_len + 0] = uint8_t(index >> 24);
  prefix_buf[tail_len + 1] = uint8_t(index >> 16);
  prefix_buf[tail_len + 2] = uint8_t(index >> 8);
  prefix_buf[tail_len + 3] = uint8_t(index);
  std::span<const uint8_t> prefix(prefix_buf, tail_len + 4);
  uint64_t h = detail::siphash128_lo(key.key_bytes.data(), prefix, element);
  if (nbits == 64) return h;
  return h & ((uint64_t(1) << nbits) - 1);
}

namespace {

// 16-lane SipHash-1-3 over the fixed 12-byte message be32(i) || element.
// Two interleaved 8-lane states keep the dependency chains busy on one
// port; measured ~4x over scalar on AVX-512 hardware.
#if defined(__x86_64__)
// kFused: instead of storing raw hashes, OR 1 << min(ctz(h), log2(sentinel))
// into out, turning out into the rows of a bit-array sketch.
template <bool kFused>
__attribute__((target("avx512f,avx512bw,avx512dq,avx512cd"))) void
indexed_batch_avx512(uint64_t k0, uint64_t k1, uint64_t element,
                     uint32_t count, uint64_t sentinel, uint64_t* out) {
  const __m512i lane = _mm512_set_epi64(7, 6, 5, 4, 3, 2, 1, 0);
  const __m512i sent = _mm512_set1_epi64(int64_t(sentinel));
  const __m512i zero = _mm512_setzero_si512();
  const __m512i c63 = _mm512_set1_epi64(63);
  const __m512i one = _mm512_set1_epi64(1);
  const __m512i bswap32_lo =
      _mm512_broadcast_i32x4(_mm_set_epi8(15, 14, 13, 12, 8, 9, 10, 11, 7, 6,
                                          5, 4, 0, 1, 2, 3));
  const __m512i iv0 = _mm512_set1_epi64(int64_t(k0 ^ 0x736f6d6570736575ULL));
  const __m512i iv1 = _mm512_set1_epi64(
      int64_t(k1 ^ 0x646f72616e646f6dULL ^ 0xeeULL));
  const __m512i iv2 = _mm512_set1_epi64(int64_t(k0 ^ 0x6c7967656e657261ULL));
  const __m512i iv3 = _mm512_set1_epi64(int64_t(k1 ^ 0x7465646279746573ULL));
  const __m512i e_lo = _mm512_set1_epi64(int64_t(element << 32));
  const __m512i m1 = _mm512_set1_epi64(
      int64_t((element >> 32) | (12ULL << 56)));
  const __m512i ee = _mm512_set1_epi64(0xee);

  uint32_t i = 1;
  for (; i + 16 <= count + 1; i += 16) {
    const __m512i idx_a = _mm512_add_epi64(_mm512_set1_epi64(i), lane);
    const __m512i idx_b = _mm512_add_epi64(_mm512_set1_epi64(i + 8), lane);
    const __m512i m0a =
        _mm512_or_si512(_mm512_shuffle_epi8(idx_a, bswap32_lo), e_lo);
    const __m512i m0b =
        _mm512_or_si512(_mm512_shuffle_epi8(idx_b, bswap32_lo), e_lo);
    __m512i a0 = iv0, a1 = iv1, a2 = iv2, a3 = iv3;
    __m512i b0 = iv0, b1 = iv1, b2 = iv2, b3 = iv3;
#define DPDICE_SIPROUND2                                   \
  a0 = _mm512_add_epi64(a0, a1);                           \
  b0 = _mm512_add_epi64(b0, b1);                           \
  a1 = _mm512_rol_epi64(a1, 13);                           \
  b1 = _mm512_rol_epi64(b1, 13);                           \
  a1 = _mm512_xor_si512(a1, a0);                           \
  b1 = _mm512_xor_si512(b1, b0);                           \
  a0 = _mm512_rol_epi64(a0, 32);                           \
  b0 = _mm512_rol_epi64(b0, 32);                           \
  a2 = _mm512_add_epi64(a2, a3);                           \
  b2 = _mm512_add_epi64(b2, b3);                           \
  a3 = _mm512_rol_epi64(a3, 16);                           \
  b3 = _mm512_rol_epi64(b3, 16);                           \
  a3 = _mm512_xor_si512(a3, a2);                           \
  b3 = _mm512_xor_si512(b3, b2);                           \
  a0 = _mm512_add_epi64(a0, a3);                           \
  b0 = _mm512_add_epi64(b0, b3);                           \
  a3 = _mm512_rol_epi64(a3, 21);                           \
  b3 = _mm512_rol_epi64(b3, 21);                           \
  a3 = _mm512_xor_si512(a3, a0);                           \
  b3 = _mm512_xor_si512(b3, b0);                           \
  a2 = _mm512_add_epi64(a2, a1);                           \
  b2 = _mm512_add_epi64(b2, b1);                           \
  a1 = _mm512_rol_epi64(a1, 17);                           \
  b1 = _mm512_rol_epi64(b1, 17);                           \
  a1 = _mm512_xor_si512(a1, a2);                           \
  b1 = _mm512_xor_si512(b1, b2);                           \
  a2 = _mm512_rol_epi64(a2, 32);                           \
  b2 = _mm512_rol_epi64(b2, 32);

    a3 = _mm512_xor_si512(a3, m0a);
    b3 = _mm512_xor_si512(b3, m0b);
    DPDICE_SIPROUND2;
    a0 = _mm512_xor_si512(a0, m0a);
    b0 = _mm512_xor_si512(b0, m0b);
    a3 = _mm512_xor_si512(a3, m1);
    b3 = _mm512_xor_si512(b3, m1);
    DPDICE_SIPROUND2;
    a0 = _mm512_xor_si512(a0, m1);
    b0 = _mm512_xor_si512(b0, m1);
    a2 = _mm512_xor_si512(a2, ee);
    b2 = _mm512_xor_si512(b2, ee);
    DPDICE_SIPROUND2;
    DPDICE_SIPROUND2;
    DPDICE_SIPROUND2;
#undef DPDICE_SIPROUND2
    __m512i ha =
        _mm512_xor_si512(_mm512_xor_si512(a0, a1), _mm512_xor_si512(a2, a3));
    __m512i hb =
        _mm512_xor_si512(_mm512_xor_si512(b0, b1), _mm512_xor_si512(b2, b3));
    uint64_t* pa = out + (i - 1);
    uint64_t* pb = pa + 8;
    if constexpr (kFused) {
      ha = _mm512_or_si512(ha, sent);
      hb = _mm512_or_si512(hb, sent);
      const __m512i la = _mm512_and_si512(ha, _mm512_sub_epi64(zero, ha));
      const __m512i lb = _mm512_and_si512(hb, _mm512_sub_epi64(zero, hb));
      const __m512i za = _mm512_sub_epi64(c63, _mm512_lzcnt_epi64(la));
      const __m512i zb = _mm512_sub_epi64(c63, _mm512_lzcnt_epi64(lb));
      const __m512i ma = _mm512_sllv_epi64(one, za);
      const __m512i mb = _mm512_sllv_epi64(one, zb);
      _mm512_storeu_si512(pa, _mm512_or_si512(_mm512_loadu_si512(pa), ma));
      _mm512_storeu_si512(pb, _mm512_or_si512(_mm512_loadu_si512(pb), mb));
    } else {
      _mm512_storeu_si512(pa, ha);
      _mm512_storeu_si512(pb, hb);
    }
  }
  for (; i <= count; ++i) {
    uint8_t key_bytes[16];
    std::memcpy(key_bytes, &k0, 8);
    std::memcpy(key_bytes + 8, &k1, 8);
    uint8_t msg[12] = {uint8_t(i >> 24), uint8_t(i >> 16), uint8_t(i >> 8),
                       uint8_t(i)};
    std::memcpy(msg + 4, &element, 8);
    const uint64_t h = detail::siphash128_lo(key_bytes, {}, msg);
    if constexpr (kFused) {
      out[i - 1] |= uint64_t(1) << std::countr_zero(h | sentinel);
    } else {
      out[i - 1] = h;
    }
  }
}
#endif  // __x86_64__

bool cpu_has_avx512() {
#if defined(__x86_64__)
  return __builtin_cpu_supports("avx512f") &&
         __builtin_cpu_supports("avx512bw") &&
         __builtin_cpu_supports("avx512dq") &&
         __builtin_cpu_supports("avx512cd");
#else
  return false;
#endif
}

}  // namespace

void keyed_hash_indexed_batch(const HashKey& key, uint64_t element,
                              uint32_t count, int nbits, uint64_t* out) {
  if (nbits < 1 || nbits > 64) {
    throw std::invalid_argument("keyed_hash_indexed_batch: nbits");
  }
  static const bool wide = cpu_has_avx512();
  if (wide && key.key_bytes.size() == 16) {
#if defined(__x86_64__)
    uint64_t k0, k1;
    std::memcpy(&k0, key.key_bytes.data(), 8);
    std::memcpy(&k1, key.key_bytes.data() + 8, 8);
    indexed_batch_avx512<false>(k0, k1, element, count, 0, out);
#endif
  } else {
    uint8_t elem_bytes[8];
    for (int b = 0; b < 8; ++b) elem_bytes[b] = uint8_t(element >> (8 * b));
    for (uint32_t i = 1; i <= count; ++i) {
      out[i - 1] = keyed_hash_indexed(key, i, elem_bytes, 64);
    }
  }
  if (nbits < 64) {
    const uint64_t mask = (uint64_t(1) << nbits) - 1;
    for (uint32_t i = 0; i < count; ++i) out[i] &= mask;
  }
}

void fm_update_rows(const HashKey& key, uint64_t element, uint32_t count,
                    int nbits, uint64_t* rows) {
  if (nbits < 0 || nbits > 63) {
    throw std::invalid_argument("fm_update_rows: nbits");
  }
  const uint64_t sentinel = uint64_t(1) << nbits;
  static const bool wide = cpu_has_avx512();
  if (wide && key.key_bytes.size() == 16) {
#if defined(__x86_64__)
    uint64_t k0, k1;
    std::memcpy(&k0, key.key_bytes.data(), 8);
    std::memcpy(&k1, key.key_bytes.data() + 8, 8);
    indexed_batch_avx512<true>(k0, k1, element, count, sentinel, rows);
    return;
#endif
  }
  uint8_t elem_bytes[8];
  for (int b = 0; b < 8; ++b) elem_bytes[b] = uint8_t(element >> (8 * b));
  for (uint32_t i = 1; i <= count; ++i) {
    const uint64_t h = keyed_hash_indexed(key, i, elem_bytes, 64);
    rows[i - 1] |= uint64_t(1) << std::countr_zero(h | sentinel);
  }
}

}  // namespace dpdice
