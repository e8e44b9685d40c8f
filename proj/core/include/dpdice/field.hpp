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

#ifndef DPDICE_FIELD_HPP_
#define DPDICE_FIELD_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>

namespace dpdice {

using uint128_t = unsigned __int128;
using int128_t = __int128;

/// Prime field F_p with p of bit length lambda + tau (statistical security
/// bits plus plaintext-domain bits). The default modulus is the smallest
/// prime >= 2^72.
struct FieldParams {
  uint128_t p;
  uint32_t lambda = 40;
  uint32_t tau = 32;

  int bit_length() const {
    int bits = 0;
    for (uint128_t v = p - 1; v != 0; v >>= 1) ++bits;
    return bits;
  }

  static FieldParams defaults() {
    return FieldParams{(uint128_t(1) << 72) + 15, 40, 32};
  }
};

/// A field element, always reduced into [0, p).
struct Fe {
  uint128_t v = 0;

  friend bool operator==(const Fe&, const Fe&) = default;
};

/// Arithmetic over F_p. Values must already be reduced; every operation
/// returns a reduced result.
class Field {
 public:
  explicit Field(FieldParams params) : p_(params.p), params_(params) {}

  const FieldParams& params() const { return params_; }
  uint128_t modulus() const { return p_; }
  int bit_length() const { return params_.bit_length(); }

  Fe from_u64(uint64_t x) const { return Fe{x % p_}; }
  Fe from_u128(uint128_t x) const { return Fe{x % p_}; }

  /// Signed integers map to centered representatives: negative v becomes
  /// p + v. Requires |v| < p/2.
  Fe encode_signed(int128_t v) const {
    if (v >= 0) return Fe{uint128_t(v) % p_};
    return Fe{p_ - (uint128_t(-v) % p_)};
  }

  /// Inverse of encode_signed: x if x < p/2, else x - p.
  int128_t centered_lift(Fe x) const {
    if (x.v < p_ / 2) return int128_t(x.v);
    return int128_t(x.v) - int128_t(p_);
  }

  Fe add(Fe a, Fe b) const {
    uint128_t s = a.v + b.v;
    if (s >= p_) s -= p_;
    return Fe{s};
  }

  Fe sub(Fe a, Fe b) const {
    return Fe{a.v >= b.v ? a.v - b.v : a.v + (p_ - b.v)};
  }

  Fe neg(Fe a) const { return Fe{a.v == 0 ? uint128_t(0) : p_ - a.v}; }

  /// Products of two 73-bit values exceed 128 bits, so the right operand is
  /// split into 40-bit halves; every intermediate then fits in 128 bits.
  Fe mul(Fe a, Fe b) const {
    const uint128_t b_hi = b.v >> 40;
    const uint128_t b_lo = b.v & ((uint128_t(1) << 40) - 1);
    uint128_t r = (((a.v * b_hi) % p_) << 40) % p_;
    r = (r + (a.v * b_lo) % p_) % p_;
    return Fe{r};
  }

  Fe pow(Fe base, uint128_t exponent) const {
    Fe result{1};
    Fe acc = base;
    while (exponent != 0) {
      if (exponent & 1) result = mul(result, acc);
      acc = mul(acc, acc);
      exponent >>= 1;
    }
    return result;
  }

  Fe inv(Fe a) const {
    if (a.v == 0) throw std::domain_error("Field::inv: zero has no inverse");
    return pow(a, p_ - 2);
  }

  /// Uniform element via rejection from the enclosing power of two.
  Fe random_element(std::mt19937_64& rng) const {
    const int bits = bit_length();
    const uint128_t mask = (bits >= 128) ? ~uint128_t(0)
                                         : (uint128_t(1) << bits) - 1;
    for (;;) {
      uint128_t candidate =
          ((uint128_t(rng()) << 64) | uint128_t(rng())) & mask;
      if (candidate < p_) return Fe{candidate};
    }
  }

  /// Uniform nonzero element.
  Fe random_nonzero(std::mt19937_64& rng) const {
    for (;;) {
      Fe x = random_element(rng);
      if (x.v != 0) return x;
    }
  }

 private:
  uint128_t p_;
  FieldParams params_;
};

}  // namespace dpdice

#endif  // DPDICE_FIELD_HPP_
