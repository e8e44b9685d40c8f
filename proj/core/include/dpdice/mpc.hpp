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

#ifndef DPDICE_MPC_HPP_
#define DPDICE_MPC_HPP_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpdice/field.hpp"

namespace dpdice::mpc {

/// Additive share of x paired with an additive share of x * Delta, where
/// Delta is the global MAC key no single party holds.
struct AuthShare {
  Fe value;
  Fe mac;

  friend bool operator==(const AuthShare&, const AuthShare&) = default;
};

struct MacKeyShare {
  Fe delta;
};

struct BeaverTriple {
  AuthShare a, b, c;  // c reconstructs to a*b
};

/// Per-party correlated randomness for one ZeroTest instance: the L shared
/// bits of the mask a, the mask itself, the exponentiation chain of a
/// nonzero R, and the dealer-computed products R^{-1} * a_t that let the
/// masked lookup argument be revealed one round after r.
struct ZeroTestMaterial {
  std::vector<AuthShare> bits;             // a_t, t = 0..L-1
  AuthShare mask;                          // a = sum 2^t a_t
  AuthShare r_inv;                         // R^{-1}
  std::vector<AuthShare> r_pows;           // R^1 .. R^D
  std::vector<AuthShare> inv_bit_products; // R^{-1} * a_t
};

class MaterialExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MacCheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MaterialCounts {
  uint64_t rand = 0;
  uint64_t rand2_bundles = 0;
  uint64_t exp_chains = 0;
  uint64_t triples = 0;
};

/// One computation party's stock of dealer material. Items are consumed in
/// order and exactly once; running out raises MaterialExhausted.
struct PartyMaterial {
  Fe delta_share;
  std::vector<AuthShare> rand;
  std::vector<ZeroTestMaterial> bundles;
  std::vector<BeaverTriple> triples;
  size_t rand_used = 0;
  size_t bundles_used = 0;
  size_t triples_used = 0;

  AuthShare take_rand() {
    if (rand_used >= rand.size()) throw MaterialExhausted("Rand exhausted");
    return rand[rand_used++];
  }
  const ZeroTestMaterial& take_bundle() {
    if (bundles_used >= bundles.size()) {
      throw MaterialExhausted("ZeroTest material exhausted");
    }
    return bundles[bundles_used++];
  }
  BeaverTriple take_triple() {
    if (triples_used >= triples.size()) {
      throw MaterialExhausted("Beaver triples exhausted");
    }
    return triples[triples_used++];
  }

  MaterialCounts counts() const {
    return MaterialCounts{rand.size(), bundles.size(), bundles.size(),
                          triples.size()};
  }
};

// ----- local share algebra (no communication) -----

inline AuthShare add_shares(const Field& f, const AuthShare& a,
                            const AuthShare& b) {
  return AuthShare{f.add(a.value, b.value), f.add(a.mac, b.mac)};
}

inline AuthShare sub_shares(const Field& f, const AuthShare& a,
                            const AuthShare& b) {
  return AuthShare{f.sub(a.value, b.value), f.sub(a.mac, b.mac)};
}

/// Adds a public constant: only the designated party adjusts its value
/// share; every party adjusts its MAC share by k * delta_share.
inline AuthShare add_public(const Field& f, const AuthShare& a, Fe k,
                            Fe delta_share, bool adjust_value) {
  return AuthShare{adjust_value ? f.add(a.value, k) : a.value,
                   f.add(a.mac, f.mul(k, delta_share))};
}

inline AuthShare mul_public(const Field& f, const AuthShare& a, Fe k) {
  return AuthShare{f.mul(a.value, k), f.mul(a.mac, k)};
}

// ----- trusted dealer (simulated offline phase) -----

/// Deals authenticated shares. The global MAC key exists only inside the
/// dealer; parties receive additive key shares.
class TrustedDealer {
 public:
  TrustedDealer(const Field& field, uint32_t party_count, uint64_t seed);

  uint32_t party_count() const { return c_; }
  const std::vector<Fe>& delta_shares() const { return delta_shares_; }

  /// Shares of a known value; value shares uniform subject to their sum,
  /// MAC shares uniform subject to summing to x * Delta.
  std::vector<AuthShare> deal(Fe x);

  /// Shares of a fresh uniform value (the value is returned for test
  /// oracles but is not part of any party's material).
  std::vector<AuthShare> deal_random(Fe* out_value = nullptr);

  /// Initializes per-party material holders carrying the MAC key shares.
  std::vector<PartyMaterial> init_parties() const;

  void append_rand(std::vector<PartyMaterial>& parties, size_t count);
  void append_zero_test(std::vector<PartyMaterial>& parties, size_t count,
                        int bit_count, int domain);
  void append_triples(std::vector<PartyMaterial>& parties, size_t count);

 private:
  Field field_;
  uint32_t c_;
  std::mt19937_64 rng_;
  Fe delta_total_;
  std::vector<Fe> delta_shares_;
};

// ----- dealer material file I/O -----
// Little-endian length-prefixed records: u32 payload length, u8 tag,
// payload. Field elements are 16 bytes little-endian.
enum class MaterialTag : uint8_t {
  RAND = 1,
  RAND2 = 2,
  EXPCHAIN = 3,
  TRIPLE = 4,
  MACKEY = 5,
};

void write_material(std::ostream& out, const PartyMaterial& material);
PartyMaterial read_material(std::istream& in);

// ----- in-process protocol helpers -----
// These drive all parties' shares inside one address space; the networked
// protocol in protocol.hpp exchanges the same quantities as messages.

/// Sum of value shares.
Fe reconstruct(const Field& f, std::span<const AuthShare> shares);

/// Value broadcast, then commit-and-open of the MAC differences
/// sigma_j = mac_j - x * delta_j; throws MacCheckFailure unless the sigmas
/// sum to zero.
Fe reveal_checked(const Field& f, std::span<const AuthShare> shares,
                  std::span<const Fe> delta_shares, std::mt19937_64& rng);

/// Secure input of a data-holder value: consumes one Rand item per party,
/// reveals the mask to the input owner and applies the broadcast x - a.
std::vector<AuthShare> dh_input_share(const Field& f, Fe x,
                                      std::vector<PartyMaterial*>& parties);

/// Beaver multiplication; consumes one triple per party and opens x-a, y-b.
std::vector<AuthShare> mul_shares(const Field& f,
                                  std::span<const AuthShare> x,
                                  std::span<const AuthShare> y,
                                  std::vector<PartyMaterial*>& parties);

/// Polynomial that maps 1 to 0 and each of 2..domain+1 to 1, interpolated
/// over F_p by Lagrange's method.
struct LookupPolynomial {
  uint32_t domain;
  std::vector<Fe> coefficients;  // beta_0 .. beta_domain

  Fe evaluate(const Field& f, Fe x) const;
  static LookupPolynomial interpolate(const Field& f, uint32_t domain);
};

// Per-party ZeroTest kernels. The online phase reveals r = a + x, then the
// masked lookup argument gamma = R^{-1}(1+h) where h is the Hamming
// distance between r and a over the L bits of the modulus; the shared
// result phi(1+h) is a local combination of gamma powers with the chain.
struct ZeroTestKernel {
  /// Share of r = a + x (to be opened).
  static AuthShare r_share(const Field& f, const AuthShare& x,
                           const ZeroTestMaterial& mat);

  /// Share of gamma = R^{-1} (1 + h) given the public r; local because the
  /// dealer supplied the R^{-1} a_t products.
  static AuthShare gamma_share(const Field& f, uint128_t r_public,
                               const ZeroTestMaterial& mat, int bit_count);

  /// Share of b = phi(1 + h) = sum_t beta_t gamma^t R^t given public gamma.
  static AuthShare result_share(const Field& f, Fe gamma_public,
                                const ZeroTestMaterial& mat,
                                const LookupPolynomial& phi, Fe delta_share,
                                bool adjust_value);
};

/// Full in-process ZeroTest on shares of x: returns shares of b with b = 0
/// iff x = 0. Consumes one ZeroTest bundle per party.
std::vector<AuthShare> zero_test(const Field& f,
                                 std::span<const AuthShare> x,
                                 std::vector<PartyMaterial*>& parties,
                                 const LookupPolynomial& phi);

}  // namespace dpdice::mpc

#endif  // DPDICE_MPC_HPP_
