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

#ifndef DPDICE_SKETCH_HPP_
#define DPDICE_SKETCH_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dpdice/hash.hpp"

namespace dpdice {

enum class EstimateMethod { FM, HLL, LOGLOG, FMS };

/// A cardinality estimate. n_hat is always finite and nonnegative.
struct Estimate {
  double n_hat = 0.0;
  EstimateMethod method = EstimateMethod::FMS;
};

/// Largest cardinality the estimators will ever report; also the upper
/// bracket of the f-inversion search.
constexpr double kMaxCardinality = 4611686018427387904.0;  // 2^62

/// m bit arrays of w bits each, updated by routing every element to a
/// single array via the low r bits of its hash (stochastic averaging).
/// Bits only ever flip 0 -> 1.
class FmsSketch {
 public:
  FmsSketch(uint32_t m, uint32_t w);

  uint32_t m() const { return m_; }
  uint32_t w() const { return w_; }
  uint32_t r() const { return r_; }

  void insert(const HashKey& key, std::span<const uint8_t> element);

  bool bit(uint32_t array, uint32_t pos) const {
    uint64_t idx = uint64_t(array) * w_ + pos;
    return (words_[idx >> 6] >> (idx & 63)) & 1;
  }
  void set_bit(uint32_t array, uint32_t pos) {
    uint64_t idx = uint64_t(array) * w_ + pos;
    words_[idx >> 6] |= uint64_t(1) << (idx & 63);
  }

  /// Z: number of zero bits across all arrays.
  uint64_t zero_count() const;

  /// Bitwise OR; sketching a union equals merging per-set sketches.
  void merge(const FmsSketch& other);

  bool operator==(const FmsSketch& other) const = default;

  void serialize(std::ostream& out) const;
  static FmsSketch deserialize(std::istream& in);

 private:
  uint32_t m_, w_, r_;
  std::vector<uint64_t> words_;
};

/// Classic m-row bit-array sketch; every insert touches all m rows through
/// m independent row hashes.
class FmSketch {
 public:
  FmSketch(uint32_t m, uint32_t w);

  uint32_t m() const { return m_; }
  uint32_t w() const { return w_; }

  void insert(const HashKey& key, std::span<const uint8_t> element);

  bool bit(uint32_t array, uint32_t pos) const {
    return (rows_[array] >> pos) & 1;
  }
  void set_bit(uint32_t array, uint32_t pos) {
    rows_[array] |= uint64_t(1) << pos;
  }

  /// Z*: sum over rows of the least zero-bit index (w for a saturated row).
  uint64_t zstar() const;

  void merge(const FmSketch& other);

  bool operator==(const FmSketch& other) const {
    return m_ == other.m_ && w_ == other.w_ && rows_ == other.rows_;
  }

  void serialize(std::ostream& out) const;
  static FmSketch deserialize(std::istream& in);

 private:
  uint32_t m_, w_;
  std::vector<uint64_t> rows_;  // one word per row, bits 0..w-1
};

/// m max-registers in [0, w-1], one touched per insert.
class HllSketch {
 public:
  HllSketch(uint32_t m, uint32_t w);

  uint32_t m() const { return m_; }
  uint32_t w() const { return w_; }
  uint32_t r() const { return r_; }
  const std::vector<uint8_t>& registers() const { return registers_; }

  void insert(const HashKey& key, std::span<const uint8_t> element);

  /// Element-wise max.
  void merge(const HllSketch& other);

  /// Sum of registers (m * Z#); the integer statistic noise is added to.
  uint64_t register_sum() const;

  bool operator==(const HllSketch& other) const = default;

  void serialize(std::ostream& out) const;
  static HllSketch deserialize(std::istream& in);

 private:
  uint32_t m_, w_, r_;
  std::vector<uint8_t> registers_;
};

/// f(n) = (1/w) * sum_x (1 - p_x)^n with p_x = 2^{-x-1}/m for x <= w-2 and
/// p_{w-1} = 2^{-w+1}/m. Strictly decreasing in n, f(0) = 1.
double f_eval(double n, uint32_t m, uint32_t w);

/// Inverts f by bisection on [0, 2^62]. Z_observed may be noisy and fall
/// outside [0, m*w]; the ratio V is clamped before inversion.
Estimate fms_estimate(double z_observed, uint32_t m, uint32_t w);

/// n_hat = 2^{zstar/m} / 0.77351, clamped to kMaxCardinality.
Estimate fm_estimate(double zstar, uint32_t m);

/// Raw harmonic-mean estimator with the linear-counting fallback below
/// 2.5*m when zero registers exist.
Estimate hll_estimate(const HllSketch& sk);

/// n_tilde = 0.783 * m * 2^{Z#} with Z# = register_sum / m.
Estimate loglog_estimate(double register_sum, uint32_t m);

/// Bias-correction constant for the HLL harmonic-mean estimator.
double hll_alpha(uint32_t m);

/// Default register width: ceil(log2(n_expected/m) + 6) for the stochastic
/// averaging sketches, clamped to [4, 64].
uint32_t default_w_stochastic(double n_expected, uint32_t m);

/// Default width for FM rows: ceil(log2(n_expected) + 6), clamped to [4, 64].
uint32_t default_w_fm(double n_expected);

}  // namespace dpdice

#endif  // DPDICE_SKETCH_HPP_
