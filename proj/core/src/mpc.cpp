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

#include "dpdice/mpc.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "dpdice/hash.hpp"

namespace dpdice::mpc {

namespace {

// Splits x into `count` uniform additive shares.
std::vector<Fe> additive_split(const Field& f, Fe x, uint32_t count,
                               std::mt19937_64& rng) {
  std::vector<Fe> shares(count);
  Fe acc{0};
  for (uint32_t j = 0; j + 1 < count; ++j) {
    shares[j] = f.random_element(rng);
    acc = f.add(acc, shares[j]);
  }
  shares[count - 1] = f.sub(x, acc);
  return shares;
}

void put_u16(std::ostream& out, uint16_t v) {
  uint8_t b[2] = {uint8_t(v), uint8_t(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, uint32_t v) {
  uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = uint8_t(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_fe(std::ostream& out, Fe x) {
  uint8_t b[16];
  for (int i = 0; i < 16; ++i) b[i] = uint8_t(x.v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 16);
}

void put_share(std::ostream& out, const AuthShare& s) {
  put_fe(out, s.value);
  put_fe(out, s.mac);
}

class Reader {
 public:
  explicit Reader(const std::vector<uint8_t>& buf) : buf_(buf) {}

  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(buf_[pos_]) | uint16_t(buf_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  Fe fe() {
    need(16);
    uint128_t v = 0;
    for (int i = 15; i >= 0; --i) v = (v << 8) | buf_[pos_ + i];
    pos_ += 16;
    return Fe{v};
  }
  AuthShare share() {
    Fe value = fe();
    Fe mac = fe();
    return AuthShare{value, mac};
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > buf_.size()) {
      throw std::runtime_error("dealer material record truncated");
    }
  }
  const std::vector<uint8_t>& buf_;
  size_t pos_ = 0;
};

}  // namespace

// ----- TrustedDealer -----

TrustedDealer::TrustedDealer(const Field& field, uint32_t party_count,
                             uint64_t seed)
    : field_(field), c_(party_count), rng_(seed) {
  if (party_count < 2) {
    throw std::invalid_argument("TrustedDealer requires at least 2 parties");
  }
  delta_total_ = field_.random_element(rng_);
  delta_shares_ = additive_split(field_, delta_total_, c_, rng_);
}

std::vector<AuthShare> TrustedDealer::deal(Fe x) {
  std::vector<Fe> values = additive_split(field_, x, c_, rng_);
  std::vector<Fe> macs =
      additive_split(field_, field_.mul(x, delta_total_), c_, rng_);
  std::vector<AuthShare> shares(c_);
  for (uint32_t j = 0; j < c_; ++j) shares[j] = AuthShare{values[j], macs[j]};
  return shares;
}

std::vector<AuthShare> TrustedDealer::deal_random(Fe* out_value) {
  Fe x = field_.random_element(rng_);
  if (out_value != nullptr) *out_value = x;
  return deal(x);
}

std::vector<PartyMaterial> TrustedDealer::init_parties() const {
  std::vector<PartyMaterial> parties(c_);
  for (uint32_t j = 0; j < c_; ++j) parties[j].delta_share = delta_shares_[j];
  return parties;
}

void TrustedDealer::append_rand(std::vector<PartyMaterial>& parties,
                                size_t count) {
  for (size_t i = 0; i < count; ++i) {
    std::vector<AuthShare> shares = deal_random();
    for (uint32_t j = 0; j < c_; ++j) parties[j].rand.push_back(shares[j]);
  }
}

void TrustedDealer::append_zero_test(std::vector<PartyMaterial>& parties,
                                     size_t count, int bit_count,
                                     int domain) {
  for (size_t i = 0; i < count; ++i) {
    std::vector<ZeroTestMaterial> mats(c_);

    // The mask must stay below p so its field value and its dealt bits
    // agree; sample in [0, p) and decompose.
    const uint128_t a_int = field_.random_element(rng_).v;
    std::vector<std::vector<AuthShare>> bit_shares(bit_count);
    for (int t = 0; t < bit_count; ++t) {
      bit_shares[t] = deal(Fe{(a_int >> t) & 1});
    }
    std::vector<AuthShare> mask_shares = deal(Fe{a_int});

    Fe r = field_.random_nonzero(rng_);
    Fe r_inv = field_.inv(r);
    std::vector<AuthShare> r_inv_shares = deal(r_inv);

    for (uint32_t j = 0; j < c_; ++j) {
      mats[j].bits.resize(bit_count);
      for (int t = 0; t < bit_count; ++t) mats[j].bits[t] = bit_shares[t][j];
      mats[j].mask = mask_shares[j];
      mats[j].r_inv = r_inv_shares[j];
      mats[j].r_pows.reserve(domain);
      mats[j].inv_bit_products.reserve(bit_count);
    }

    Fe r_pow{1};
    for (int k = 1; k <= domain; ++k) {
      r_pow = field_.mul(r_pow, r);
      std::vector<AuthShare> pow_shares = deal(r_pow);
      for (uint32_t j = 0; j < c_; ++j) mats[j].r_pows.push_back(pow_shares[j]);
    }
    for (int t = 0; t < bit_count; ++t) {
      Fe product = ((a_int >> t) & 1) != 0 ? r_inv : Fe{0};
      std::vector<AuthShare> product_shares = deal(product);
      for (uint32_t j = 0; j < c_; ++j) {
        mats[j].inv_bit_products.push_back(product_shares[j]);
      }
    }
    for (uint32_t j = 0; j < c_; ++j) {
      parties[j].bundles.push_back(std::move(mats[j]));
    }
  }
}

void TrustedDealer::append_triples(std::vector<PartyMaterial>& parties,
                                   size_t count) {
  for (size_t i = 0; i < count; ++i) {
    Fe a = field_.random_element(rng_);
    Fe b = field_.random_element(rng_);
    std::vector<AuthShare> a_shares = deal(a);
    std::vector<AuthShare> b_shares = deal(b);
    std::vector<AuthShare> c_shares = deal(field_.mul(a, b));
    for (uint32_t j = 0; j < c_; ++j) {
      parties[j].triples.push_back(
          BeaverTriple{a_shares[j], b_shares[j], c_shares[j]});
    }
  }
}

// ----- material file I/O -----

namespace {

void write_record(std::ostream& out, MaterialTag tag,
                  const std::string& payload) {
  put_u32(out, uint32_t(payload.size()));
  out.put(char(tag));
  out.write(payload.data(), std::streamsize(payload.size()));
}

}  // namespace

void write_material(std::ostream& out, const PartyMaterial& material) {
  auto record = [&out](MaterialTag tag, auto&& fill) {
    std::string payload;
    {
      std::ostringstream body;
      fill(body);
      payload = body.str();
    }
    write_record(out, tag, payload);
  };

  record(MaterialTag::MACKEY,
         [&](std::ostream& o) { put_fe(o, material.delta_share); });
  for (const AuthShare& s : material.rand) {
    record(MaterialTag::RAND, [&](std::ostream& o) { put_share(o, s); });
  }
  for (const ZeroTestMaterial& m : material.bundles) {
    record(MaterialTag::RAND2, [&](std::ostream& o) {
      put_u16(o, uint16_t(m.bits.size()));
      for (const AuthShare& s : m.bits) put_share(o, s);
      put_share(o, m.mask);
    });
    record(MaterialTag::EXPCHAIN, [&](std::ostream& o) {
      put_u16(o, uint16_t(m.r_pows.size()));
      put_share(o, m.r_inv);
      for (const AuthShare& s : m.r_pows) put_share(o, s);
      put_u16(o, uint16_t(m.inv_bit_products.size()));
      for (const AuthShare& s : m.inv_bit_products) put_share(o, s);
    });
  }
  for (const BeaverTriple& t : material.triples) {
    record(MaterialTag::TRIPLE, [&](std::ostream& o) {
      put_share(o, t.a);
      put_share(o, t.b);
      put_share(o, t.c);
    });
  }
}

PartyMaterial read_material(std::istream& in) {
  PartyMaterial material;
  bool have_key = false;
  ZeroTestMaterial pending;  // RAND2 waiting for its EXPCHAIN
  bool have_pending = false;

  for (;;) {
    uint8_t header[5];
    in.read(reinterpret_cast<char*>(header), 5);
    if (in.gcount() == 0 && in.eof()) break;
    if (in.gcount() != 5) throw std::runtime_error("truncated record header");
    uint32_t len = 0;
    for (int i = 3; i >= 0; --i) len = (len << 8) | header[i];
    auto tag = MaterialTag(header[4]);
    std::vector<uint8_t> payload(len);
    in.read(reinterpret_cast<char*>(payload.data()), std::streamsize(len));
    if (uint32_t(in.gcount()) != len) {
      throw std::runtime_error("truncated record payload");
    }
    Reader r(payload);
    switch (tag) {
      case MaterialTag::MACKEY:
        material.delta_share = r.fe();
        have_key = true;
        break;
      case MaterialTag::RAND:
        material.rand.push_back(r.share());
        break;
      case MaterialTag::RAND2: {
        if (have_pending) {
          throw std::runtime_error("Rand2 record without exp chain");
        }
        pending = ZeroTestMaterial{};
        uint16_t bits = r.u16();
        pending.bits.resize(bits);
        for (uint16_t t = 0; t < bits; ++t) pending.bits[t] = r.share();
        pending.mask = r.share();
        have_pending = true;
        break;
      }
      case MaterialTag::EXPCHAIN: {
        if (!have_pending) {
          throw std::runtime_error("exp chain record without Rand2");
        }
        uint16_t domain = r.u16();
        pending.r_inv = r.share();
        pending.r_pows.resize(domain);
        for (uint16_t k = 0; k < domain; ++k) pending.r_pows[k] = r.share();
        uint16_t products = r.u16();
        pending.inv_bit_products.resize(products);
        for (uint16_t t = 0; t < products; ++t) {
          pending.inv_bit_products[t] = r.share();
        }
        material.bundles.push_back(std::move(pending));
        have_pending = false;
        break;
      }
      case MaterialTag::TRIPLE: {
        BeaverTriple t;
        t.a = r.share();
        t.b = r.share();
        t.c = r.share();
        material.triples.push_back(t);
        break;
      }
      default:
        throw std::runtime_error("unknown dealer material tag");
    }
    if (!r.done()) throw std::runtime_error("trailing bytes in record");
  }
  if (!have_key) throw std::runtime_error("material lacks MAC key share");
  if (have_pending) throw std::runtime_error("Rand2 record without exp chain");
  return material;
}

// ----- in-process helpers -----

Fe reconstruct(const Field& f, std::span<const AuthShare> shares) {
  Fe x{0};
  for (const AuthShare& s : shares) x = f.add(x, s.value);
  return x;
}

namespace {

// Binding commitment to a MAC difference: SipHash of sigma under a random
// 16-byte nonce revealed at opening time.
struct SigmaCommitment {
  uint8_t nonce[16];
  uint128_t digest;

  static SigmaCommitment make(Fe sigma, std::mt19937_64& rng) {
    SigmaCommitment c;
    for (int i = 0; i < 2; ++i) {
      uint64_t word = rng();
      std::memcpy(c.nonce + 8 * i, &word, 8);
    }
    c.digest = hash_sigma(sigma, c.nonce);
    return c;
  }

  static uint128_t hash_sigma(Fe sigma, const uint8_t nonce[16]) {
    uint8_t msg[16];
    for (int i = 0; i < 16; ++i) msg[i] = uint8_t(sigma.v >> (8 * i));
    return detail::siphash128(nonce, {}, std::span<const uint8_t>(msg, 16));
  }
};

}  // namespace

Fe reveal_checked(const Field& f, std::span<const AuthShare> shares,
                  std::span<const Fe> delta_shares, std::mt19937_64& rng) {
  if (shares.size() != delta_shares.size()) {
    throw std::invalid_argument("share / key-share count mismatch");
  }
  Fe x = reconstruct(f, shares);

  // Commit phase: every party commits to sigma_j before seeing any other.
  std::vector<Fe> sigmas(shares.size());
  std::vector<SigmaCommitment> commitments(shares.size());
  for (size_t j = 0; j < shares.size(); ++j) {
    sigmas[j] = f.sub(shares[j].mac, f.mul(x, delta_shares[j]));
    commitments[j] = SigmaCommitment::make(sigmas[j], rng);
  }

  // Open phase: verify each opening against its commitment, then the sum.
  Fe total{0};
  for (size_t j = 0; j < shares.size(); ++j) {
    if (SigmaCommitment::hash_sigma(sigmas[j], commitments[j].nonce) !=
        commitments[j].digest) {
      throw MacCheckFailure("sigma opening does not match commitment");
    }
    total = f.add(total, sigmas[j]);
  }
  if (total.v != 0) throw MacCheckFailure("MAC check failed on reveal");
  return x;
}

std::vector<AuthShare> dh_input_share(const Field& f, Fe x,
                                      std::vector<PartyMaterial*>& parties) {
  std::vector<AuthShare> rand_shares(parties.size());
  Fe mask{0};
  for (size_t j = 0; j < parties.size(); ++j) {
    rand_shares[j] = parties[j]->take_rand();
    mask = f.add(mask, rand_shares[j].value);
  }
  Fe broadcast = f.sub(x, mask);  // x - a, sent by the input owner
  std::vector<AuthShare> shares(parties.size());
  for (size_t j = 0; j < parties.size(); ++j) {
    shares[j] = add_public(f, rand_shares[j], broadcast,
                           parties[j]->delta_share, j == 0);
  }
  return shares;
}

std::vector<AuthShare> mul_shares(const Field& f,
                                  std::span<const AuthShare> x,
                                  std::span<const AuthShare> y,
                                  std::vector<PartyMaterial*>& parties) {
  const size_t c = parties.size();
  if (x.size() != c || y.size() != c) {
    throw std::invalid_argument("share count mismatch in mul_shares");
  }
  std::vector<BeaverTriple> triples(c);
  Fe e{0}, d{0};
  for (size_t j = 0; j < c; ++j) {
    triples[j] = parties[j]->take_triple();
    e = f.add(e, f.sub(x[j].value, triples[j].a.value));
    d = f.add(d, f.sub(y[j].value, triples[j].b.value));
  }
  // z = c + e*b + d*a + e*d with e = x-a, d = y-b opened.
  std::vector<AuthShare> z(c);
  for (size_t j = 0; j < c; ++j) {
    AuthShare acc = triples[j].c;
    acc = add_shares(f, acc, mul_public(f, triples[j].b, e));
    acc = add_shares(f, acc, mul_public(f, triples[j].a, d));
    acc = add_public(f, acc, f.mul(e, d), parties[j]->delta_share, j == 0);
    z[j] = acc;
  }
  return z;
}

// ----- lookup polynomial -----

namespace {

Fe horner(const Field& f, const std::vector<Fe>& coeffs, Fe x) {
  Fe acc{0};
  for (size_t i = coeffs.size(); i-- > 0;) {
    acc = f.add(f.mul(acc, x), coeffs[i]);
  }
  return acc;
}

}  // namespace

Fe LookupPolynomial::evaluate(const Field& f, Fe x) const {
  return horner(f, coefficients, x);
}

LookupPolynomial LookupPolynomial::interpolate(const Field& f,
                                               uint32_t domain) {
  const uint32_t n = domain + 1;  // nodes 1 .. domain+1
  // full(x) = prod_i (x - i), degree n; coefficients low-to-high.
  std::vector<Fe> full(n + 1, Fe{0});
  full[0] = Fe{1};
  for (uint32_t i = 1; i <= n; ++i) {
    Fe node = f.from_u64(i);
    for (uint32_t k = i; k-- > 0;) {
      full[k + 1] = f.add(full[k + 1], full[k]);
      full[k] = f.mul(full[k], f.neg(node));
    }
  }
  // Lagrange: for each node with target 1, add full / (x - node) scaled by
  // the inverse of its value at the node.
  LookupPolynomial phi;
  phi.domain = domain;
  phi.coefficients.assign(n, Fe{0});
  std::vector<Fe> quotient(n);
  for (uint32_t i = 2; i <= n; ++i) {  // node 1 has target 0
    Fe node = f.from_u64(i);
    quotient[n - 1] = full[n];
    for (uint32_t k = n - 1; k-- > 0;) {
      quotient[k] = f.add(full[k + 1], f.mul(node, quotient[k + 1]));
    }
    Fe denom = horner(f, quotient, node);
    Fe scale = f.inv(denom);
    for (uint32_t k = 0; k < n; ++k) {
      phi.coefficients[k] =
          f.add(phi.coefficients[k], f.mul(quotient[k], scale));
    }
  }
  return phi;
}

// ----- ZeroTest kernels -----

AuthShare ZeroTestKernel::r_share(const Field& f, const AuthShare& x,
                                  const ZeroTestMaterial& mat) {
  return add_shares(f, x, mat.mask);
}

AuthShare ZeroTestKernel::gamma_share(const Field& f, uint128_t r_public,
                                      const ZeroTestMaterial& mat,
                                      int bit_count) {
  // gamma = R^{-1} (1 + h), h = sum_t (a_t + r_t - 2 r_t a_t); linear in
  // the dealer products, so no interaction is spent here.
  Fe scalar{1};
  AuthShare acc{Fe{0}, Fe{0}};
  for (int t = 0; t < bit_count; ++t) {
    const bool r_t = ((r_public >> t) & 1) != 0;
    if (r_t) {
      scalar = f.add(scalar, Fe{1});
      acc = sub_shares(f, acc, mat.inv_bit_products[t]);
    } else {
      acc = add_shares(f, acc, mat.inv_bit_products[t]);
    }
  }
  return add_shares(f, acc, mul_public(f, mat.r_inv, scalar));
}

AuthShare ZeroTestKernel::result_share(const Field& f, Fe gamma_public,
                                       const ZeroTestMaterial& mat,
                                       const LookupPolynomial& phi,
                                       Fe delta_share, bool adjust_value) {
  // b = phi(1+h) = beta_0 + sum_{t>=1} beta_t gamma^t R^t.
  AuthShare acc{Fe{0}, Fe{0}};
  Fe gamma_pow{1};
  for (uint32_t t = 1; t <= phi.domain; ++t) {
    gamma_pow = f.mul(gamma_pow, gamma_public);
    Fe coeff = f.mul(phi.coefficients[t], gamma_pow);
    acc = add_shares(f, acc, mul_public(f, mat.r_pows[t - 1], coeff));
  }
  return add_public(f, acc, phi.coefficients[0], delta_share, adjust_value);
}

std::vector<AuthShare> zero_test(const Field& f,
                                 std::span<const AuthShare> x,
                                 std::vector<PartyMaterial*>& parties,
                                 const LookupPolynomial& phi) {
  const size_t c = parties.size();
  if (x.size() != c) {
    throw std::invalid_argument("share count mismatch in zero_test");
  }
  std::vector<const ZeroTestMaterial*> mats(c);
  for (size_t j = 0; j < c; ++j) mats[j] = &parties[j]->take_bundle();
  const int bit_count = int(mats[0]->bits.size());

  Fe r{0};
  for (size_t j = 0; j < c; ++j) {
    r = f.add(r, ZeroTestKernel::r_share(f, x[j], *mats[j]).value);
  }
  Fe gamma{0};
  for (size_t j = 0; j < c; ++j) {
    gamma = f.add(
        gamma, ZeroTestKernel::gamma_share(f, r.v, *mats[j], bit_count).value);
  }
  std::vector<AuthShare> b(c);
  for (size_t j = 0; j < c; ++j) {
    b[j] = ZeroTestKernel::result_share(f, gamma, *mats[j], phi,
                                        parties[j]->delta_share, j == 0);
  }
  return b;
}

}  // namespace dpdice::mpc
