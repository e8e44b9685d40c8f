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

// End-to-end acceptance checks. Each criterion prints exactly one
// "PASS criterion N" / "FAIL criterion N" line with its measured numbers;
// the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string_view>
#include <random>
#include <vector>

#include "dpdice/bench.hpp"
#include "dpdice/dpnoise.hpp"
#include "dpdice/mpc.hpp"
#include "dpdice/protocol.hpp"
#include "dpdice/transport.hpp"

namespace {

using namespace dpdice;

int failures = 0;

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void report(int criterion, bool pass, const char* fmt, ...) {
  std::printf("%s criterion %d: ", pass ? "PASS" : "FAIL", criterion);
  va_list args;
  va_start(args, fmt);
  std::vprintf(fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
  if (!pass) ++failures;
}

// 1. FMS accuracy: stddev of n_hat/n within [0.7, 1.3] * ln2/sqrt(4096).
void criterion1() {
  const double t0 = now();
  bench::ExperimentSpec spec;
  spec.kind = bench::SketchKind::FMS;
  spec.n = 1'000'000;
  spec.m = 4096;
  spec.w = 14;
  spec.trials = 100;
  spec.seed = 11;
  const auto result = bench::run_experiment(spec);
  const double elapsed = now() - t0;
  const bool pass = result.stddev_rel >= 0.0076 &&
                    result.stddev_rel <= 0.0141 && elapsed < 60.0;
  report(1, pass, "FMS stddev(n_hat/n)=%.5f in [0.0076, 0.0141], %.1fs < 60s",
         result.stddev_rel, elapsed);
}

// 2. Distributed DP accuracy at the paper's defaults.
void criterion2() {
  const double t0 = now();
  double aare_lo = 1e9, aare_hi = -1e9;
  bool in_range = true;
  for (uint64_t n : {uint64_t(20000), uint64_t(50000)}) {
    bench::ExperimentSpec spec;
    spec.kind = bench::SketchKind::FMS;
    spec.n = n;
    spec.m = 4096;
    spec.mode = bench::PrivacyMode::DISTRIBUTED_DISCRETE;
    spec.eps = 0.1;
    spec.delta = 1e-12;
    spec.d = 20;
    spec.trials = 100;
    spec.seed = 22;
    const double aare = bench::run_experiment(spec).aare;
    aare_lo = std::min(aare_lo, aare);
    aare_hi = std::max(aare_hi, aare);
    in_range = in_range && aare >= 0.005 && aare <= 0.018;
  }
  const double elapsed = now() - t0;
  const bool pass = in_range && elapsed < 120.0;
  report(2, pass,
         "distributed AARE in [%.4f, %.4f] within [0.005, 0.018], "
         "%.1fs < 120s",
         aare_lo, aare_hi, elapsed);
}

// 3. calibrate(0.1, 1e-12, 20) -> eps_d = 0.012 +/- 10%.
void criterion3() {
  const PrivacyBudget budget = calibrate_sigma(0.1, 1e-12, 20);
  const bool pass = std::abs(budget.eps_cdp - 0.012) <= 0.0012;
  report(3, pass, "eps_d=%.5f within 0.012 +/- 10%% (sigma=%.2f)",
         budget.eps_cdp, budget.sigma);
}

// 4. Baseline ordering under distributed noise at eps=0.1.
void criterion4() {
  const double t0 = now();
  auto run = [](bench::SketchKind kind) {
    bench::ExperimentSpec spec;
    spec.kind = kind;
    spec.n = 100'000;
    spec.m = 4096;
    spec.mode = bench::PrivacyMode::DISTRIBUTED_DISCRETE;
    spec.eps = 0.1;
    spec.delta = 1e-12;
    spec.d = 20;
    spec.trials = 100;
    spec.seed = 33;
    return bench::run_experiment(spec).aare;
  };
  const double fms = run(bench::SketchKind::FMS);
  const double loglog = run(bench::SketchKind::LOGLOG);
  const double fm = run(bench::SketchKind::FM);
  const double elapsed = now() - t0;
  const bool pass =
      fms < loglog / 5.0 && fms < fm / 100.0 && elapsed < 180.0;
  report(4, pass,
         "AARE fms=%.4f loglog=%.4f (%.1fx) fm=%.4f (%.0fx), %.1fs < 180s",
         fms, loglog, loglog / fms, fm, fm / fms, elapsed);
}

// 5. 50 random protocol instances match the plaintext oracle exactly.
void criterion5() {
  const double t0 = now();
  std::mt19937_64 rng(505);
  int exact = 0;
  const int instances = 50;
  for (int trial = 0; trial < instances; ++trial) {
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
      const size_t len = rng() % 80;
      for (size_t i = 0; i < len; ++i) set.push_back(rng() % 200);
    }

    FmsSketch oracle(cfg.m, cfg.w);
    const HashKey key = HashKey::from_seed(cfg.hash_seed);
    for (const auto& set : sets) {
      for (uint64_t e : set) {
        uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = uint8_t(e >> (8 * i));
        oracle.insert(key, std::span<const uint8_t>(b, 8));
      }
    }
    int64_t noise = 0;
    for (uint32_t j = 0; j < cfg.d; ++j) {
      std::mt19937_64 noise_rng(cfg.noise_seed ^
                                (0x9e3779b97f4a7c15ULL * (j + 1)));
      noise += sample_discrete_gaussian({cfg.sigma}, noise_rng);
    }

    const auto transcript = protocol::run_protocol(cfg, sets);
    if (transcript.revealed_noisy_z == int64_t(oracle.zero_count()) + noise) {
      ++exact;
    }
  }
  const double elapsed = now() - t0;
  const bool pass = exact == instances && elapsed < 120.0;
  report(5, pass, "%d/%d instances exact, %.1fs < 120s", exact, instances,
         elapsed);
}

// 6. ZeroTest equals the nonzero indicator on 0..1000 and random inputs.
void criterion6() {
  const Field f(FieldParams::defaults());
  mpc::TrustedDealer dealer(f, 3, 606);
  auto parties = dealer.init_parties();
  const int total = 1001 + 1000;
  dealer.append_rand(parties, 8 * total);
  dealer.append_zero_test(parties, total, uint32_t(f.bit_length()),
                          uint32_t(f.bit_length()));
  std::vector<mpc::PartyMaterial*> ps;
  for (auto& p : parties) ps.push_back(&p);
  const auto deltas = dealer.delta_shares();
  const auto phi =
      mpc::LookupPolynomial::interpolate(f, uint32_t(f.bit_length()));

  std::mt19937_64 rng(66);
  int correct = 0;
  for (int i = 0; i < total; ++i) {
    const uint64_t x = i <= 1000 ? uint64_t(i) : uint64_t(uint32_t(rng()));
    const auto xs = mpc::dh_input_share(f, f.from_u64(x), ps);
    const auto bs = mpc::zero_test(f, xs, ps, phi);
    const Fe b = mpc::reveal_checked(f, bs, deltas, rng);
    if (b.v == (x == 0 ? 0u : 1u)) ++correct;
  }
  report(6, correct == total, "%d/%d indicators correct", correct, total);
}

// 7. Authenticated reveal: every tampered run aborts, no honest run does.
void criterion7() {
  const Field f(FieldParams::defaults());
  mpc::TrustedDealer dealer(f, 4, 707);
  auto parties = dealer.init_parties();
  const auto deltas = dealer.delta_shares();
  std::mt19937_64 rng(77);

  int tampered_caught = 0, honest_aborts = 0;
  const int runs = 10000;
  for (int i = 0; i < runs; ++i) {
    const Fe x = f.random_element(rng);
    auto shares = dealer.deal(x);
    try {
      if (mpc::reveal_checked(f, shares, deltas, rng) != x) ++honest_aborts;
    } catch (const mpc::MacCheckFailure&) {
      ++honest_aborts;
    }
    const size_t victim = rng() % shares.size();
    shares[victim].value =
        f.add(shares[victim].value, f.from_u64(1 + rng() % 1000));
    try {
      (void)mpc::reveal_checked(f, shares, deltas, rng);
    } catch (const mpc::MacCheckFailure&) {
      ++tampered_caught;
    }
  }
  const bool pass = tampered_caught == runs && honest_aborts == 0;
  report(7, pass, "%d/%d tampers caught, %d/%d honest aborts",
         tampered_caught, runs, honest_aborts, 0);
}

// 8. Discrete Gaussian moments against the series oracle.
void criterion8() {
  std::mt19937_64 rng(88);
  bool pass = true;
  double worst_rel = 0.0;
  for (double sigma : {0.5, 5.0, 74.4}) {
    // Series oracle.
    const int cutoff = int(std::ceil(20 * sigma)) + 20;
    double z = 0.0, second = 0.0;
    for (int k = -cutoff; k <= cutoff; ++k) {
      const double p = std::exp(-0.5 * k * k / (sigma * sigma));
      z += p;
      second += p * double(k) * k;
    }
    const double want_var = second / z;

    const int n = 1'000'000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = double(sample_discrete_gaussian({sigma}, rng));
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double rel = std::abs(var - want_var) / want_var;
    worst_rel = std::max(worst_rel, rel);
    pass = pass && std::abs(mean) < 4 * sigma / std::sqrt(double(n)) &&
           rel < 0.05;
  }
  report(8, pass, "worst variance deviation %.3f%% < 5%% over three sigmas",
         100 * worst_rel);
}

// 9. Merge/union bit-exactness fuzz for all three sketch kinds.
void criterion9() {
  std::mt19937_64 rng(99);
  int mismatches = 0;
  const int pairs = 1000;
  for (int trial = 0; trial < pairs; ++trial) {
    const HashKey key = HashKey::from_seed(rng());
    const uint32_t m = 64, w = 8;
    FmsSketch sa(m, w), sb(m, w), su(m, w);
    FmSketch fa(m, w), fb(m, w), fu(m, w);
    HllSketch ha(m, w), hb(m, w), hu(m, w);
    const size_t n1 = rng() % 300, n2 = rng() % 300;
    for (size_t i = 0; i < n1 + n2; ++i) {
      uint8_t b[8];
      const uint64_t e = rng() % 512;
      for (int j = 0; j < 8; ++j) b[j] = uint8_t(e >> (8 * j));
      const std::span<const uint8_t> elem(b, 8);
      if (i < n1) {
        sa.insert(key, elem);
        fa.insert(key, elem);
        ha.insert(key, elem);
      } else {
        sb.insert(key, elem);
        fb.insert(key, elem);
        hb.insert(key, elem);
      }
      su.insert(key, elem);
      fu.insert(key, elem);
      hu.insert(key, elem);
    }
    sa.merge(sb);
    fa.merge(fb);
    ha.merge(hb);
    if (!(sa == su && fa == fu && ha == hu)) ++mismatches;
  }
  report(9, mismatches == 0, "%d/%d merge/union pairs bit-exact",
         pairs - mismatches, pairs);
}

// 10. Transport accounting: bytes conserved per phase; the aggregation uses
// the constant round count (2 ZeroTest rounds + 1 reveal round).
void criterion10() {
  protocol::ProtocolConfig cfg;
  cfg.m = 16;
  cfg.w = 8;
  cfg.d = 3;
  cfg.c = 3;
  cfg.sigma = 5.0;
  cfg.session = wire::SessionId::from_seed(10);
  std::vector<std::vector<uint64_t>> sets(cfg.d);
  for (uint32_t j = 0; j < cfg.d; ++j) {
    for (uint64_t i = 0; i < 30; ++i) sets[j].push_back(j * 17 + i);
  }
  const auto transcript = protocol::run_protocol(cfg, sets);
  const bool rounds_ok =
      transcript.zero_test_rounds == 2 && transcript.reveal_rounds == 1;

  // Per-phase conservation measured directly on a hub.
  transport::MemoryHub hub(2);
  auto a = hub.endpoint(0);
  auto b = hub.endpoint(1);
  bool conserved = true;
  for (const char* phase : {"collection", "aggregation", "reveal"}) {
    a->set_phase(phase);
    b->set_phase(phase);
    std::mt19937_64 rng(std::string_view(phase).size());
    for (int i = 0; i < 200; ++i) {
      wire::WireMessage msg;
      msg.type = wire::MsgType::kRevealShare;
      msg.session = cfg.session;
      msg.sender = 0;
      msg.receiver = 1;
      msg.payload.resize(rng() % 64);
      for (auto& byte : msg.payload) byte = uint8_t(rng());
      a->send(msg);
      (void)b->recv_from(0);
    }
    const auto sent = a->stats().per_phase.at(phase);
    const auto received = b->stats().per_phase.at(phase);
    conserved = conserved && sent.bytes_sent == received.bytes_received &&
                sent.messages_sent == received.messages_received &&
                sent.bytes_sent > 0;
  }
  uint64_t total_bytes = 0;
  for (uint64_t bytes : transcript.bytes_sent) total_bytes += bytes;
  report(10, rounds_ok && conserved && total_bytes > 0,
         "rounds=2+1, per-phase bytes conserved, %llu protocol bytes",
         (unsigned long long)total_bytes);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  return failures == 0 ? 0 : 1;
}
