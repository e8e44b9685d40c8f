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

#include <random>
#include <vector>

#include "doctest.h"
#include "dpdice/protocol.hpp"

namespace {

using namespace dpdice;

protocol::ProtocolConfig small_config() {
  protocol::ProtocolConfig cfg;
  cfg.m = 16;
  cfg.w = 8;
  cfg.d = 3;
  cfg.c = 3;
  cfg.sigma = 5.0;
  cfg.hash_seed = 42;
  cfg.dealer_seed = 7;
  cfg.noise_seed = 9;
  cfg.session = wire::SessionId::from_seed(1);
  return cfg;
}

std::vector<std::vector<uint64_t>> overlapping_sets(uint32_t d) {
  std::vector<std::vector<uint64_t>> sets(d);
  for (uint32_t j = 0; j < d; ++j) {
    for (uint64_t i = 0; i < 40; ++i) sets[j].push_back(j * 25 + i);
  }
  return sets;
}

// Plaintext union statistic the protocol must reproduce exactly.
int64_t oracle_z(const protocol::ProtocolConfig& cfg,
                 const std::vector<std::vector<uint64_t>>& sets) {
  FmsSketch sk(cfg.m, cfg.w);
  HashKey key = HashKey::from_seed(cfg.hash_seed);
  for (const auto& set : sets) {
    for (uint64_t e : set) {
      uint8_t b[8];
      for (int i = 0; i < 8; ++i) b[i] = uint8_t(e >> (8 * i));
      sk.insert(key, std::span<const uint8_t>(b, 8));
    }
  }
  return int64_t(sk.zero_count());
}

int64_t oracle_noise(const protocol::ProtocolConfig& cfg) {
  int64_t total = 0;
  for (uint32_t j = 0; j < cfg.d; ++j) {
    std::mt19937_64 rng(cfg.noise_seed ^ (0x9e3779b97f4a7c15ULL * (j + 1)));
    total += sample_discrete_gaussian({cfg.sigma}, rng);
  }
  return total;
}

}  // namespace

TEST_CASE("end-to-end run reveals exactly Z plus the noise sum") {
  const auto cfg = small_config();
  const auto sets = overlapping_sets(cfg.d);
  const auto transcript = protocol::run_protocol(cfg, sets);
  CHECK(transcript.revealed_noisy_z == oracle_z(cfg, sets) +
                                           oracle_noise(cfg));
  CHECK(transcript.estimate.n_hat ==
        fms_estimate(double(transcript.revealed_noisy_z), cfg.m, cfg.w).n_hat);
}

TEST_CASE("zero-noise runs are exact and estimate the union") {
  auto cfg = small_config();
  cfg.zero_noise = true;
  const auto sets = overlapping_sets(cfg.d);  // union is {0, ..., 89}
  const auto transcript = protocol::run_protocol(cfg, sets);
  CHECK(transcript.revealed_noisy_z == oracle_z(cfg, sets));
  // m=16 arrays give a coarse estimate; theory stderr ~ 0.69/sqrt(16).
  CHECK(transcript.estimate.n_hat == doctest::Approx(90.0).epsilon(0.6));
}

TEST_CASE("round and material accounting match the plan") {
  const auto cfg = small_config();
  const auto transcript = protocol::run_protocol(cfg, overlapping_sets(cfg.d));
  CHECK(transcript.zero_test_rounds == 2);
  CHECK(transcript.reveal_rounds == 1);
  const auto plan = protocol::MaterialPlan::for_config(cfg);
  CHECK(plan.rand == uint64_t(cfg.d) * (cfg.bit_count() + 1));
  CHECK(plan.bundles == cfg.bit_count());
  CHECK(plan.triples == cfg.bit_count());
  CHECK(transcript.material.rand == plan.rand);
  CHECK(transcript.material.rand2_bundles == plan.bundles);
  CHECK(transcript.material.exp_chains == plan.bundles);
  CHECK(transcript.material.triples == plan.triples);
}

TEST_CASE("every party sends bytes and totals are conserved") {
  const auto cfg = small_config();
  const auto transcript = protocol::run_protocol(cfg, overlapping_sets(cfg.d));
  REQUIRE(transcript.bytes_sent.size() == cfg.d + cfg.c);
  for (uint64_t b : transcript.bytes_sent) CHECK(b > 0);
  CHECK(transcript.phase_seconds.count("collection") == 1);
  CHECK(transcript.phase_seconds.count("aggregation") == 1);
  CHECK(transcript.phase_seconds.count("reveal") == 1);
}

TEST_CASE("empty and disjoint inputs") {
  auto cfg = small_config();
  cfg.zero_noise = true;
  // Empty union: all m*w bits are zero.
  std::vector<std::vector<uint64_t>> empty(cfg.d);
  const auto t_empty = protocol::run_protocol(cfg, empty);
  CHECK(t_empty.revealed_noisy_z == int64_t(cfg.bit_count()));
  CHECK(t_empty.estimate.n_hat == 0.0);
  // One element held by every DH counts once.
  std::vector<std::vector<uint64_t>> shared(cfg.d, std::vector<uint64_t>{5});
  const auto t_shared = protocol::run_protocol(cfg, shared);
  CHECK(t_shared.revealed_noisy_z == int64_t(cfg.bit_count()) - 1);
}

TEST_CASE("a tampering CP aborts the session") {
  auto cfg = small_config();
  for (uint32_t cp = 0; cp < cfg.c; ++cp) {
    protocol::TamperSpec tamper{true, cp};
    CHECK_THROWS_AS(protocol::run_protocol(cfg, overlapping_sets(cfg.d),
                                           tamper),
                    protocol::SessionAbort);
  }
}

TEST_CASE("config validation rejects bad shapes") {
  auto cfg = small_config();
  cfg.m = 17;  // not a power of two
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.c = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.sigma = 0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.d = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("randomized instances stay exact") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 6; ++trial) {
    protocol::ProtocolConfig cfg;
    cfg.m = (rng() & 1) ? 8 : 16;
    cfg.w = (rng() & 1) ? 6 : 8;
    cfg.d = 1 + uint32_t(rng() % 3);
    cfg.c = 2 + uint32_t(rng() % 2);
    cfg.sigma = 5.0;
    cfg.hash_seed = rng();
    cfg.dealer_seed = rng();
    cfg.noise_seed = rng();
    cfg.session = wire::SessionId::from_seed(rng());
    std::vector<std::vector<uint64_t>> sets(cfg.d);
    for (auto& set : sets) {
      const size_t len = rng() % 60;
      for (size_t i = 0; i < len; ++i) set.push_back(rng() % 128);
    }
    const auto transcript = protocol::run_protocol(cfg, sets);
    REQUIRE(transcript.revealed_noisy_z ==
            oracle_z(cfg, sets) + oracle_noise(cfg));
  }
}
