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

#include "dpdice/protocol.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

namespace dpdice::protocol {

namespace {

using mpc::AuthShare;
using transport::Transport;
using wire::MsgType;
using wire::WireMessage;

std::vector<uint8_t> element_bytes(uint64_t e) {
  std::vector<uint8_t> b(8);
  for (int i = 0; i < 8; ++i) b[i] = uint8_t(e >> (8 * i));
  return b;
}

WireMessage make_msg(const ProtocolConfig& config, MsgType type,
                     uint16_t sender, uint16_t receiver,
                     std::vector<uint8_t> payload) {
  WireMessage msg;
  msg.type = type;
  msg.session = config.session;
  msg.sender = sender;
  msg.receiver = receiver;
  msg.payload = std::move(payload);
  return msg;
}

WireMessage expect(Transport& transport, uint16_t sender, MsgType type,
                   const std::string& phase) {
  WireMessage msg = transport.recv_from(sender);
  if (msg.type == MsgType::kAbort) {
    throw SessionAbort(phase, "peer aborted the session");
  }
  if (msg.type != type) {
    throw SessionAbort(phase, "unexpected message type");
  }
  return msg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

uint32_t ProtocolConfig::r() const {
  uint32_t r = 0;
  while ((1u << r) < m) ++r;
  return r;
}

void ProtocolConfig::validate() const {
  if (m == 0 || (m & (m - 1)) != 0) {
    throw std::invalid_argument("m must be a power of two");
  }
  if (w < 1 || w > 64) throw std::invalid_argument("w out of range");
  if (c < 2) throw std::invalid_argument("need at least 2 CPs");
  if (d < 1) throw std::invalid_argument("need at least 1 DH");
  if (sigma < 0.5) throw std::invalid_argument("sigma must be >= 0.5");
  // Revealed plaintext is Z + sum N_j; require it fits the tau-bit domain
  // with a >10-sigma margin on each noise term.
  const double bound = double(bit_count()) + double(d) * (10.0 * sigma + 1.0);
  if (bound >= std::ldexp(1.0, int(field.tau))) {
    throw std::invalid_argument("plaintext bound exceeds tau-bit domain");
  }
}

MaterialPlan MaterialPlan::for_config(const ProtocolConfig& config) {
  const uint64_t bits = config.bit_count();
  return MaterialPlan{uint64_t(config.d) * (bits + 1), bits, bits};
}

std::vector<mpc::PartyMaterial> offline_prepare(const ProtocolConfig& config) {
  config.validate();
  const MaterialPlan plan = MaterialPlan::for_config(config);
  const Field field(config.field);
  const int bits = field.bit_length();
  mpc::TrustedDealer dealer(field, config.c, config.dealer_seed);
  std::vector<mpc::PartyMaterial> parties = dealer.init_parties();
  dealer.append_rand(parties, plan.rand);
  dealer.append_zero_test(parties, plan.bundles, bits, bits);
  dealer.append_triples(parties, plan.triples);
  return parties;
}

void run_dh(const ProtocolConfig& config, uint32_t j,
            const std::vector<uint64_t>& elements, Transport& transport) {
  const Field field(config.field);
  const uint64_t n_items = config.bit_count() + 1;  // bits plus noise
  transport.set_phase("collection");

  std::vector<Fe> mask(n_items, Fe{0});
  for (uint32_t k = 0; k < config.c; ++k) {
    WireMessage msg = expect(transport, config.cp_id(k),
                             MsgType::kMaskShare, "collection");
    wire::Reader reader(msg.payload);
    if (reader.u32() != n_items) {
      throw SessionAbort("collection", "mask share count mismatch");
    }
    for (uint64_t i = 0; i < n_items; ++i) {
      mask[i] = field.add(mask[i], reader.fe());
    }
  }

  FmsSketch sketch(config.m, config.w);
  HashKey key = HashKey::from_seed(config.hash_seed);
  for (uint64_t e : elements) sketch.insert(key, element_bytes(e));

  int64_t noise = 0;
  if (!config.zero_noise) {
    std::mt19937_64 rng(config.noise_seed ^
                        (0x9e3779b97f4a7c15ULL * (j + 1)));
    noise = sample_discrete_gaussian({config.sigma}, rng);
  }

  wire::Writer writer;
  writer.u32(uint32_t(n_items));
  uint64_t pos = 0;
  for (uint32_t i = 0; i < config.m; ++i) {
    for (uint32_t l = 0; l < config.w; ++l, ++pos) {
      Fe x = Fe{sketch.bit(i, l) ? uint128_t(1) : uint128_t(0)};
      writer.fe(field.sub(x, mask[pos]));
    }
  }
  writer.fe(field.sub(field.encode_signed(noise), mask[n_items - 1]));

  WireMessage out = make_msg(config, MsgType::kMaskedInput, config.dh_id(j),
                             0, writer.take());
  std::vector<uint16_t> cps;
  for (uint32_t k = 0; k < config.c; ++k) cps.push_back(config.cp_id(k));
  transport.broadcast(out, cps);

  // Block until the session concludes.
  transport.set_phase("reveal");
  WireMessage done = transport.recv_from(config.cp_id(0));
  if (done.type == MsgType::kAbort) {
    throw SessionAbort("reveal", "session aborted");
  }
  if (done.type != MsgType::kResult) {
    throw SessionAbort("reveal", "unexpected terminal message");
  }
}

namespace {

// Opened-value ledger for the deferred MAC check: every value any CP opens
// is recorded with this CP's MAC share, in an order all CPs agree on.
struct OpenLedger {
  std::vector<Fe> values;
  std::vector<Fe> macs;

  void record(Fe value, Fe mac) {
    values.push_back(value);
    macs.push_back(mac);
  }
};

// Broadcasts this CP's share vector for one batched opening and returns the
// reconstructed public values. One communication round.
std::vector<Fe> open_batch(const ProtocolConfig& config, uint32_t k,
                           const Field& field, Transport& transport,
                           uint8_t subphase, const std::vector<Fe>& shares,
                           const std::string& phase) {
  wire::Writer writer;
  writer.u8(subphase);
  writer.u32(uint32_t(shares.size()));
  for (Fe s : shares) writer.fe(s);
  WireMessage msg = make_msg(config, MsgType::kRevealShare, config.cp_id(k),
                             0, writer.take());
  std::vector<uint16_t> peers;
  for (uint32_t other = 0; other < config.c; ++other) {
    if (other != k) peers.push_back(config.cp_id(other));
  }
  transport.broadcast(msg, peers);

  std::vector<Fe> total = shares;
  for (uint32_t other = 0; other < config.c; ++other) {
    if (other == k) continue;
    WireMessage in = expect(transport, config.cp_id(other),
                            MsgType::kRevealShare, phase);
    wire::Reader reader(in.payload);
    if (reader.u8() != subphase || reader.u32() != shares.size()) {
      throw SessionAbort(phase, "batched opening mismatch");
    }
    for (size_t i = 0; i < total.size(); ++i) {
      total[i] = field.add(total[i], reader.fe());
    }
  }
  return total;
}

uint128_t sigma_digest(const std::vector<Fe>& sigmas,
                       const uint8_t nonce[16]) {
  std::vector<uint8_t> bytes;
  bytes.reserve(sigmas.size() * 16);
  for (Fe s : sigmas) {
    for (int i = 0; i < 16; ++i) bytes.push_back(uint8_t(s.v >> (8 * i)));
  }
  return detail::siphash128(nonce, {}, bytes);
}

}  // namespace

CpResult run_cp(const ProtocolConfig& config, uint32_t k,
                mpc::PartyMaterial material, const mpc::LookupPolynomial& phi,
                Transport& transport, const TamperSpec& tamper) {
  const Field field(config.field);
  const uint64_t bits = config.bit_count();
  const uint64_t n_items = bits + 1;
  const bool is_lead = (k == 0);
  const Fe delta = material.delta_share;
  CpResult result;

  // ----- collection -----
  auto t0 = std::chrono::steady_clock::now();
  transport.set_phase("collection");
  std::vector<std::vector<AuthShare>> rand_shares(config.d);
  for (uint32_t j = 0; j < config.d; ++j) {
    wire::Writer writer;
    writer.u32(uint32_t(n_items));
    rand_shares[j].resize(n_items);
    for (uint64_t i = 0; i < n_items; ++i) {
      rand_shares[j][i] = material.take_rand();
      writer.fe(rand_shares[j][i].value);
    }
    transport.send(make_msg(config, MsgType::kMaskShare, config.cp_id(k),
                            config.dh_id(j), writer.take()));
  }

  // Bitwise sums accumulate straight from each DH's masked inputs.
  std::vector<AuthShare> bit_sum(bits, AuthShare{Fe{0}, Fe{0}});
  AuthShare noise_sum{Fe{0}, Fe{0}};
  for (uint32_t j = 0; j < config.d; ++j) {
    WireMessage msg = expect(transport, config.dh_id(j),
                             MsgType::kMaskedInput, "collection");
    wire::Reader reader(msg.payload);
    if (reader.u32() != n_items) {
      throw SessionAbort("collection", "masked input count mismatch");
    }
    for (uint64_t i = 0; i < n_items; ++i) {
      AuthShare share =
          mpc::add_public(field, rand_shares[j][i], reader.fe(), delta,
                          is_lead);
      if (i < bits) {
        bit_sum[i] = mpc::add_shares(field, bit_sum[i], share);
      } else {
        noise_sum = mpc::add_shares(field, noise_sum, share);
      }
    }
    rand_shares[j].clear();
  }
  result.phase_seconds["collection"] = seconds_since(t0);

  // ----- aggregation: batched ZeroTests, two rounds -----
  t0 = std::chrono::steady_clock::now();
  transport.set_phase("aggregation");
  const int field_bits = field.bit_length();
  OpenLedger ledger;

  std::vector<const mpc::ZeroTestMaterial*> mats(bits);
  std::vector<Fe> r_value(bits);
  std::vector<Fe> r_mac(bits);
  for (uint64_t i = 0; i < bits; ++i) {
    mats[i] = &material.take_bundle();
    AuthShare r = mpc::ZeroTestKernel::r_share(field, bit_sum[i], *mats[i]);
    r_value[i] = r.value;
    r_mac[i] = r.mac;
  }
  std::vector<Fe> r_public =
      open_batch(config, k, field, transport, 1, r_value, "aggregation");
  for (uint64_t i = 0; i < bits; ++i) ledger.record(r_public[i], r_mac[i]);

  std::vector<Fe> gamma_value(bits);
  std::vector<Fe> gamma_mac(bits);
  for (uint64_t i = 0; i < bits; ++i) {
    AuthShare g = mpc::ZeroTestKernel::gamma_share(field, r_public[i].v,
                                                   *mats[i], field_bits);
    gamma_value[i] = g.value;
    gamma_mac[i] = g.mac;
  }
  std::vector<Fe> gamma_public =
      open_batch(config, k, field, transport, 2, gamma_value, "aggregation");
  for (uint64_t i = 0; i < bits; ++i) {
    ledger.record(gamma_public[i], gamma_mac[i]);
  }

  AuthShare indicator_sum{Fe{0}, Fe{0}};
  for (uint64_t i = 0; i < bits; ++i) {
    AuthShare b = mpc::ZeroTestKernel::result_share(
        field, gamma_public[i], *mats[i], phi, delta, is_lead);
    indicator_sum = mpc::add_shares(field, indicator_sum, b);
  }
  // Z = m*w - sum of one-indicators, then the aggregate noise.
  AuthShare final_share = mpc::add_public(
      field, AuthShare{field.neg(indicator_sum.value),
                       field.neg(indicator_sum.mac)},
      field.from_u64(bits), delta, is_lead);
  final_share = mpc::add_shares(field, final_share, noise_sum);
  result.phase_seconds["aggregation"] = seconds_since(t0);

  // ----- reveal with deferred MAC check -----
  t0 = std::chrono::steady_clock::now();
  transport.set_phase("reveal");
  if (tamper.enabled && tamper.cp == k) {
    final_share.value = field.add(final_share.value, Fe{1});
  }
  std::vector<Fe> revealed = open_batch(config, k, field, transport, 3,
                                        {final_share.value}, "reveal");
  const Fe output = revealed[0];
  ledger.record(output, final_share.mac);

  std::vector<Fe> sigmas(ledger.values.size());
  for (size_t i = 0; i < sigmas.size(); ++i) {
    sigmas[i] =
        field.sub(ledger.macs[i], field.mul(ledger.values[i], delta));
  }
  uint8_t nonce[16];
  {
    std::mt19937_64 nonce_rng(config.dealer_seed ^ config.noise_seed ^
                              (uint64_t(k) << 32) ^
                              std::random_device{}());
    for (int i = 0; i < 2; ++i) {
      uint64_t word = nonce_rng();
      std::memcpy(nonce + 8 * i, &word, 8);
    }
  }
  const uint128_t digest = sigma_digest(sigmas, nonce);
  {
    wire::Writer writer;
    for (int i = 0; i < 16; ++i) writer.u8(uint8_t(digest >> (8 * i)));
    WireMessage msg = make_msg(config, MsgType::kMacSigmaCommit,
                               config.cp_id(k), 0, writer.take());
    std::vector<uint16_t> peers;
    for (uint32_t other = 0; other < config.c; ++other) {
      if (other != k) peers.push_back(config.cp_id(other));
    }
    transport.broadcast(msg, peers);
  }
  std::vector<uint128_t> commitments(config.c, 0);
  commitments[k] = digest;
  for (uint32_t other = 0; other < config.c; ++other) {
    if (other == k) continue;
    WireMessage msg = expect(transport, config.cp_id(other),
                             MsgType::kMacSigmaCommit, "reveal");
    wire::Reader reader(msg.payload);
    uint128_t peer_digest = 0;
    for (int i = 0; i < 16; ++i) {
      peer_digest |= uint128_t(reader.u8()) << (8 * i);
    }
    commitments[other] = peer_digest;
  }
  {
    wire::Writer writer;
    writer.raw(std::span<const uint8_t>(nonce, 16));
    writer.u32(uint32_t(sigmas.size()));
    for (Fe s : sigmas) writer.fe(s);
    WireMessage msg = make_msg(config, MsgType::kMacSigmaOpen,
                               config.cp_id(k), 0, writer.take());
    std::vector<uint16_t> peers;
    for (uint32_t other = 0; other < config.c; ++other) {
      if (other != k) peers.push_back(config.cp_id(other));
    }
    transport.broadcast(msg, peers);
  }
  std::vector<Fe> sigma_total = sigmas;
  bool mac_ok = true;
  for (uint32_t other = 0; other < config.c; ++other) {
    if (other == k) continue;
    WireMessage msg = expect(transport, config.cp_id(other),
                             MsgType::kMacSigmaOpen, "reveal");
    wire::Reader reader(msg.payload);
    uint8_t peer_nonce[16];
    std::memcpy(peer_nonce, reader.raw(16).data(), 16);
    if (reader.u32() != sigmas.size()) {
      throw SessionAbort("reveal", "sigma vector length mismatch");
    }
    std::vector<Fe> peer_sigmas(sigmas.size());
    for (size_t i = 0; i < sigmas.size(); ++i) peer_sigmas[i] = reader.fe();
    if (sigma_digest(peer_sigmas, peer_nonce) != commitments[other]) {
      mac_ok = false;
    }
    for (size_t i = 0; i < sigmas.size(); ++i) {
      sigma_total[i] = field.add(sigma_total[i], peer_sigmas[i]);
    }
  }
  for (Fe s : sigma_total) {
    if (s.v != 0) mac_ok = false;
  }
  if (!mac_ok) {
    if (is_lead) {
      for (uint32_t j = 0; j < config.d; ++j) {
        transport.send(make_msg(config, MsgType::kAbort, config.cp_id(k),
                                config.dh_id(j), {}));
      }
    }
    throw SessionAbort("reveal", "MAC check failed");
  }

  const int64_t lifted = int64_t(field.centered_lift(output));
  result.revealed_noisy_z = lifted;
  double z = double(lifted);
  if (z < 0) z = 0;
  if (z > double(bits)) z = double(bits);
  result.estimate = fms_estimate(z, config.m, config.w);

  if (is_lead) {
    wire::Writer writer;
    writer.fe(output);
    for (uint32_t j = 0; j < config.d; ++j) {
      transport.send(make_msg(config, MsgType::kResult, config.cp_id(k),
                              config.dh_id(j), writer.take()));
    }
  }
  result.phase_seconds["reveal"] = seconds_since(t0);
  return result;
}

RunTranscript run_protocol(const ProtocolConfig& config,
                           const std::vector<std::vector<uint64_t>>& sets,
                           const TamperSpec& tamper) {
  config.validate();
  if (sets.size() != config.d) {
    throw std::invalid_argument("need one element set per DH");
  }
  const Field field(config.field);
  std::vector<mpc::PartyMaterial> material = offline_prepare(config);
  const mpc::LookupPolynomial phi =
      mpc::LookupPolynomial::interpolate(field, uint32_t(field.bit_length()));

  const auto party_count = uint16_t(config.d + config.c);
  transport::MemoryHub hub(party_count);
  std::vector<std::unique_ptr<Transport>> endpoints(party_count);
  for (uint16_t p = 0; p < party_count; ++p) endpoints[p] = hub.endpoint(p);

  std::vector<CpResult> cp_results(config.c);
  std::vector<std::optional<SessionAbort>> aborts(party_count);
  std::mutex abort_mutex;
  auto record_failure = [&](uint16_t party, SessionAbort abort) {
    {
      std::lock_guard lock(abort_mutex);
      aborts[party] = std::move(abort);
    }
    hub.close("session aborted");
  };

  std::vector<std::thread> threads;
  for (uint32_t j = 0; j < config.d; ++j) {
    threads.emplace_back([&, j] {
      try {
        run_dh(config, j, sets[j], *endpoints[config.dh_id(j)]);
      } catch (const SessionAbort& abort) {
        record_failure(config.dh_id(j), abort);
      } catch (const std::exception& e) {
        record_failure(config.dh_id(j), SessionAbort("transport", e.what()));
      }
    });
  }
  for (uint32_t k = 0; k < config.c; ++k) {
    threads.emplace_back([&, k] {
      try {
        cp_results[k] = run_cp(config, k, std::move(material[k]), phi,
                               *endpoints[config.cp_id(k)], tamper);
      } catch (const SessionAbort& abort) {
        record_failure(config.cp_id(k), abort);
      } catch (const std::exception& e) {
        record_failure(config.cp_id(k), SessionAbort("transport", e.what()));
      }
    });
  }
  for (auto& t : threads) t.join();

  for (const auto& abort : aborts) {
    if (abort && abort->phase != "transport") throw *abort;
  }
  for (const auto& abort : aborts) {
    if (abort) throw *abort;
  }

  const MaterialPlan plan = MaterialPlan::for_config(config);
  RunTranscript transcript;
  transcript.revealed_noisy_z = cp_results[0].revealed_noisy_z;
  transcript.estimate = cp_results[0].estimate;
  transcript.zero_test_rounds = 2;
  transcript.reveal_rounds = 1;
  transcript.material =
      mpc::MaterialCounts{plan.rand, plan.bundles, plan.bundles, plan.triples};
  transcript.phase_seconds = cp_results[0].phase_seconds;
  transcript.bytes_sent.resize(party_count);
  for (uint16_t p = 0; p < party_count; ++p) {
    transcript.bytes_sent[p] = endpoints[p]->stats().total.bytes_sent;
  }
  return transcript;
}

}  // namespace dpdice::protocol
