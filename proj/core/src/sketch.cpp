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

#include "dpdice/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dpdice {
namespace {

constexpr double kFmPhi = 0.77351;
constexpr double kLogLogAlpha = 0.783;

uint32_t log2_exact(uint32_t m) {
  if (m == 0 || (m & (m - 1)) != 0) {
    throw std::invalid_argument("m must be a power of two");
  }
  return std::countr_zero(m);
}

void check_width(uint32_t w) {
  if (w < 1 || w > 64) throw std::invalid_argument("w must be in [1, 64]");
}

void write_u32(std::ostream& out, uint32_t v) {
  uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                  uint8_t(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("sketch deserialize: truncated header");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

void write_header(std::ostream& out, const char magic[4], uint32_t m,
                  uint32_t w) {
  out.write(magic, 4);
  write_u32(out, m);
  write_u32(out, w);
}

void expect_magic(std::istream& in, const char magic[4]) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw std::runtime_error("sketch deserialize: bad magic");
  }
}

// Packed bit matrix I/O: row-major bit order, LSB-first within each byte.
void write_bits(std::ostream& out, const std::vector<uint64_t>& words,
                uint64_t nbits) {
  const uint64_t nbytes = (nbits + 7) / 8;
  for (uint64_t i = 0; i < nbytes; ++i) {
    uint8_t byte = uint8_t(words[i / 8] >> (8 * (i % 8)));
    out.put(char(byte));
  }
}

void read_bits(std::istream& in, std::vector<uint64_t>& words,
               uint64_t nbits) {
  const uint64_t nbytes = (nbits + 7) / 8;
  for (uint64_t i = 0; i < nbytes; ++i) {
    int ch = in.get();
    if (ch < 0) throw std::runtime_error("sketch deserialize: truncated bits");
    words[i / 8] |= uint64_t(uint8_t(ch)) << (8 * (i % 8));
  }
}

}  // namespace

FmsSketch::FmsSketch(uint32_t m, uint32_t w)
    : m_(m), w_(w), r_(log2_exact(m)) {
  check_width(w);
  words_.assign((uint64_t(m) * w + 63) / 64, 0);
}

void FmsSketch::insert(const HashKey& key, std::span<const uint8_t> element) {
  const int nbits = int(r_ + w_ - 1);
  const uint128_t h = keyed_hash(key, element, nbits);
  const uint32_t array = uint32_t(h & (m_ - 1));
  const uint128_t high = h >> r_;
  const uint32_t pos = uint32_t(rho(high, int(w_ - 1)));
  set_bit(array, pos);
}

uint64_t FmsSketch::zero_count() const {
  uint64_t ones = 0;
  for (uint64_t word : words_) ones += std::popcount(word);
  return uint64_t(m_) * w_ - ones;
}

void FmsSketch::merge(const FmsSketch& other) {
  if (m_ != other.m_ || w_ != other.w_) {
    throw std::invalid_argument("FmsSketch::merge: dimension mismatch");
  }
  for (size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

void FmsSketch::serialize(std::ostream& out) const {
  write_header(out, "FMS1", m_, w_);
  write_bits(out, words_, uint64_t(m_) * w_);
}

FmsSketch FmsSketch::deserialize(std::istream& in) {
  expect_magic(in, "FMS1");
  uint32_t m = read_u32(in);
  uint32_t w = read_u32(in);
  FmsSketch sk(m, w);
  read_bits(in, sk.words_, uint64_t(m) * w);
  return sk;
}

FmSketch::FmSketch(uint32_t m, uint32_t w) : m_(m), w_(w) {
  if (m == 0) throw std::invalid_argument("m must be positive");
  check_width(w);
  rows_.assign(m, 0);
}

void FmSketch::insert(const HashKey& key, std::span<const uint8_t> element) {
  const int nbits = int(w_ - 1);
  if (element.size() == 8) {
    // All-rows batch: the dominant cost of this sketch is m hashes per
    // element, so route the common fixed-width case through the wide path.
    uint64_t e = 0;
    for (int b = 0; b < 8; ++b) e |= uint64_t(element[b]) << (8 * b);
    fm_update_rows(key, e, m_, nbits, rows_.data());
    return;
  }
  for (uint32_t i = 1; i <= m_; ++i) {
    const uint64_t h = keyed_hash_indexed(key, i, element, nbits);
    set_bit(i - 1, uint32_t(rho(h, nbits)));
  }
}

uint64_t FmSketch::zstar() const {
  uint64_t total = 0;
  for (uint32_t i = 0; i < m_; ++i) {
    total += std::countr_one(rows_[i]);  // rows never set bits at or above w
  }
  return total;
}

void FmSketch::merge(const FmSketch& other) {
  if (m_ != other.m_ || w_ != other.w_) {
    throw std::invalid_argument("FmSketch::merge: dimension mismatch");
  }
  for (uint32_t i = 0; i < m_; ++i) rows_[i] |= other.rows_[i];
}

void FmSketch::serialize(std::ostream& out) const {
  write_header(out, "FM01", m_, w_);
  // Packed row-major bit layout, independent of the in-memory row words.
  std::vector<uint64_t> words((uint64_t(m_) * w_ + 63) / 64, 0);
  for (uint32_t i = 0; i < m_; ++i) {
    const uint64_t base = uint64_t(i) * w_;
    const uint64_t row = rows_[i];
    words[base >> 6] |= row << (base & 63);
    if (((base & 63) + w_) > 64 && (base & 63) != 0) {
      words[(base >> 6) + 1] |= row >> (64 - (base & 63));
    }
  }
  write_bits(out, words, uint64_t(m_) * w_);
}

FmSketch FmSketch::deserialize(std::istream& in) {
  expect_magic(in, "FM01");
  uint32_t m = read_u32(in);
  uint32_t w = read_u32(in);
  FmSketch sk(m, w);
  std::vector<uint64_t> words((uint64_t(m) * w + 63) / 64, 0);
  read_bits(in, words, uint64_t(m) * w);
  const uint64_t row_mask = w == 64 ? ~uint64_t(0) : (uint64_t(1) << w) - 1;
  for (uint32_t i = 0; i < m; ++i) {
    const uint64_t base = uint64_t(i) * w;
    uint64_t row = words[base >> 6] >> (base & 63);
    if (((base & 63) + w) > 64 && (base & 63) != 0) {
      row |= words[(base >> 6) + 1] << (64 - (base & 63));
    }
    sk.rows_[i] = row & row_mask;
  }
  return sk;
}

HllSketch::HllSketch(uint32_t m, uint32_t w)
    : m_(m), w_(w), r_(log2_exact(m)) {
  check_width(w);
  registers_.assign(m, 0);
}

void HllSketch::insert(const HashKey& key, std::span<const uint8_t> element) {
  const int nbits = int(r_ + w_ - 1);
  const uint128_t h = keyed_hash(key, element, nbits);
  const uint32_t reg = uint32_t(h & (m_ - 1));
  const uint128_t high = h >> r_;
  const uint8_t rank = uint8_t(rho(high, int(w_ - 1)));
  registers_[reg] = std::max(registers_[reg], rank);
}

void HllSketch::merge(const HllSketch& other) {
  if (m_ != other.m_ || w_ != other.w_) {
    throw std::invalid_argument("HllSketch::merge: dimension mismatch");
  }
  for (uint32_t i = 0; i < m_; ++i) {
    registers_[i] = std::max(registers_[i], other.registers_[i]);
  }
}

uint64_t HllSketch::register_sum() const {
  uint64_t total = 0;
  for (uint8_t reg : registers_) total += reg;
  return total;
}

void HllSketch::serialize(std::ostream& out) const {
  write_header(out, "HLL1", m_, w_);
  out.write(reinterpret_cast<const char*>(registers_.data()),
            std::streamsize(registers_.size()));
}

HllSketch HllSketch::deserialize(std::istream& in) {
  expect_magic(in, "HLL1");
  uint32_t m = read_u32(in);
  uint32_t w = read_u32(in);
  HllSketch sk(m, w);
  in.read(reinterpret_cast<char*>(sk.registers_.data()), std::streamsize(m));
  if (!in) throw std::runtime_error("sketch deserialize: truncated registers");
  return sk;
}

double f_eval(double n, uint32_t m, uint32_t w) {
  if (n < 0) throw std::invalid_argument("f_eval: n must be nonnegative");
  double sum = 0.0;
  for (uint32_t x = 0; x < w; ++x) {
    const double px = (x + 1 < w) ? std::ldexp(1.0 / m, -int(x) - 1)
                                  : std::ldexp(1.0 / m, -int(w) + 1);
    sum += std::exp(n * std::log1p(-px));
  }
  return sum / w;
}

Estimate fms_estimate(double z_observed, uint32_t m, uint32_t w) {
  const double total_bits = double(m) * w;
  double v = z_observed / total_bits;
  if (v >= 1.0) return {0.0, EstimateMethod::FMS};
  v = std::max(v, f_eval(kMaxCardinality, m, w));

  double lo = 0.0, hi = kMaxCardinality;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f_eval(mid, m, w);
    if (std::abs(fm - v) < 1e-12 * v) {
      lo = hi = mid;
      break;
    }
    if (fm > v) {
      lo = mid;
    } else {
      hi = mid;
    }
    if ((hi - lo) < 1e-12 * std::max(lo, 1.0)) break;
  }
  return {0.5 * (lo + hi), EstimateMethod::FMS};
}

Estimate fm_estimate(double zstar, uint32_t m) {
  const double exponent = std::min(zstar / m, 62.0);
  double n_hat = std::exp2(exponent) / kFmPhi;
  n_hat = std::clamp(n_hat, 0.0, kMaxCardinality);
  return {n_hat, EstimateMethod::FM};
}

double hll_alpha(uint32_t m) {
  switch (m) {
    case 16:
      return 0.673;
    case 32:
      return 0.697;
    case 64:
      return 0.709;
    default:
      return 0.7213 / (1.0 + 1.079 / m);
  }
}

Estimate hll_estimate(const HllSketch& sk) {
  const uint32_t m = sk.m();
  double harmonic = 0.0;
  uint32_t zero_regs = 0;
  for (uint8_t reg : sk.registers()) {
    // Registers hold the zero-based rank; the harmonic-mean analysis is for
    // one-based ranks with 0 marking an untouched register, so nonzero
    // registers contribute 2^{-reg-1} and zero registers contribute 1.
    harmonic += reg == 0 ? 1.0 : std::ldexp(1.0, -int(reg) - 1);
    if (reg == 0) ++zero_regs;
  }
  const double raw = hll_alpha(m) * double(m) * double(m) / harmonic;
  if (raw < 2.5 * m && zero_regs > 0) {
    // A register is zero when untouched or when all its elements have rank
    // zero: P = e^{-n/m} * e^{n/(2m)}, so E/m estimates e^{-n/(2m)}.
    return {-2.0 * double(m) * std::log(double(zero_regs) / m),
            EstimateMethod::HLL};
  }
  return {std::min(raw, kMaxCardinality), EstimateMethod::HLL};
}

Estimate loglog_estimate(double register_sum, uint32_t m) {
  const double zsharp = register_sum / m;
  const double exponent = std::min(zsharp, 62.0);
  double n_hat = kLogLogAlpha * m * std::exp2(exponent);
  n_hat = std::clamp(n_hat, 0.0, kMaxCardinality);
  return {n_hat, EstimateMethod::LOGLOG};
}

uint32_t default_w_stochastic(double n_expected, uint32_t m) {
  const double raw = std::ceil(std::log2(std::max(n_expected, 1.0) / m) + 6.0);
  return uint32_t(std::clamp(raw, 4.0, 64.0));
}

uint32_t default_w_fm(double n_expected) {
  const double raw = std::ceil(std::log2(std::max(n_expected, 1.0)) + 6.0);
  return uint32_t(std::clamp(raw, 4.0, 64.0));
}

}  // namespace dpdice
