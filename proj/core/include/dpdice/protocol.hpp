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

#ifndef DPDICE_PROTOCOL_HPP_
#define DPDICE_PROTOCOL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpdice/dpnoise.hpp"
#include "dpdice/field.hpp"
#include "dpdice/hash.hpp"
#include "dpdice/mpc.hpp"
#include "dpdice/sketch.hpp"
#include "dpdice/transport.hpp"
#include "dpdice/wire.hpp"

namespace dpdice::protocol {

/// Party id layout on the wire: data holders 0..d-1, computation parties
/// d..d+c-1.
struct ProtocolConfig {
  uint32_t m = 4096;
  uint32_t w = 16;
  uint32_t d = 20;
  uint32_t c = 5;
  FieldParams field = FieldParams::defaults();
  double sigma = 10.0;
  uint64_t hash_seed = 1;
  uint64_t dealer_seed = 2;
  uint64_t noise_seed = 3;
  wire::SessionId session;
  bool zero_noise = false;  // test hook: N_j forced to 0

  uint32_t r() const;  // log2 m
  uint64_t bit_count() const { return uint64_t(m) * w; }
  uint16_t dh_id(uint32_t j) const { return uint16_t(j); }
  uint16_t cp_id(uint32_t k) const { return uint16_t(d + k); }

  /// Throws std::invalid_argument unless m is a power of two, c >= 2,
  /// d >= 1, sigma >= 0.5, and the plaintext range fits tau bits.
  void validate() const;
};

/// Dealer material demand for one session.
struct MaterialPlan {
  uint64_t rand;       // d * (m*w + 1)
  uint64_t bundles;    // m*w ZeroTests (Rand2 + exp chain each)
  uint64_t triples;    // one per ZeroTest

  static MaterialPlan for_config(const ProtocolConfig& config);
};

class SessionAbort : public std::runtime_error {
 public:
  SessionAbort(std::string phase, const std::string& what)
      : std::runtime_error(what), phase(std::move(phase)) {}
  std::string phase;
};

struct RunTranscript {
  int64_t revealed_noisy_z = 0;
  Estimate estimate;
  uint32_t zero_test_rounds = 0;
  uint32_t reveal_rounds = 0;
  mpc::MaterialCounts material;                    // per CP, as dealt
  std::vector<uint64_t> bytes_sent;                // indexed by party id
  std::map<std::string, double> phase_seconds;     // CP 0 wall clock
};

/// Test hook: the designated CP flips the low bit of its output reveal
/// share, leaving its MAC share untouched.
struct TamperSpec {
  bool enabled = false;
  uint32_t cp = 0;
};

/// Generates per-CP material for the session's full demand, deterministic
/// under config.dealer_seed.
std::vector<mpc::PartyMaterial> offline_prepare(const ProtocolConfig& config);

/// Data-holder j: sketches its set, samples its noise share, and
/// input-shares all m*w bits plus the noise to the CPs. Blocks on
/// transport; returns after the session result (or abort) arrives.
void run_dh(const ProtocolConfig& config, uint32_t j,
            const std::vector<uint64_t>& elements,
            transport::Transport& transport);

struct CpResult {
  int64_t revealed_noisy_z = 0;
  Estimate estimate;
  std::map<std::string, double> phase_seconds;
};

/// Computation party k: collects shares, merges via batched ZeroTests, and
/// reveals the noisy statistic with a deferred MAC check over every opened
/// value. Throws SessionAbort on MAC failure.
CpResult run_cp(const ProtocolConfig& config, uint32_t k,
                mpc::PartyMaterial material, const mpc::LookupPolynomial& phi,
                transport::Transport& transport,
                const TamperSpec& tamper = {});

/// Hosts all d + c parties on threads over an in-memory hub.
RunTranscript run_protocol(const ProtocolConfig& config,
                           const std::vector<std::vector<uint64_t>>& sets,
                           const TamperSpec& tamper = {});

}  // namespace dpdice::protocol

#endif  // DPDICE_PROTOCOL_HPP_
