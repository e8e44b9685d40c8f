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

#include <cmath>
#include <set>
#include <unordered_set>

#include "doctest.h"
#include "dpdice/bench.hpp"

namespace {

using namespace dpdice;
using namespace dpdice::bench;

}  // namespace

TEST_CASE("gen_union_partition covers exactly n distinct elements") {
  for (double overlap : {0.0, 0.3, 1.0}) {
    const uint64_t n = 5000;
    const uint32_t d = 7;
    const auto sets = gen_union_partition(n, d, overlap, 99);
    REQUIRE(sets.size() == d);
    std::unordered_set<uint64_t> uni;
    uint64_t multiplicity = 0;
    for (const auto& set : sets) {
      std::unordered_set<uint64_t> local(set.begin(), set.end());
      REQUIRE(local.size() == set.size());  // no duplicates within a holder
      multiplicity += set.size();
      uni.insert(set.begin(), set.end());
    }
    CHECK(uni.size() == n);
    // floor(overlap * n) elements are held twice, the rest once.
    CHECK(multiplicity == n + uint64_t(overlap * double(n)));
  }
}

TEST_CASE("gen_union_partition is deterministic in its seed") {
  CHECK(gen_union_partition(100, 3, 0.5, 4) ==
        gen_union_partition(100, 3, 0.5, 4));
  CHECK(gen_union_partition(100, 3, 0.5, 4) !=
        gen_union_partition(100, 3, 0.5, 5));
}

TEST_CASE("theory_error reproduces the Poissonized series") {
  const uint32_t m = 4096, w = 16;
  const double n = 1e6;
  const TheoryError t = theory_error(n, m, w, 0.0);
  // Independent evaluation of the series.
  double mu = 0.0, second = 0.0;
  for (uint32_t x = 0; x < w; ++x) {
    const double px = (x + 1 < w) ? std::ldexp(1.0 / m, -int(x) - 1)
                                  : std::ldexp(1.0 / m, -int(w) + 1);
    mu += std::exp(-n * px);
    second += std::exp(-n * px) - std::exp(-2 * n * px);
  }
  mu /= w;
  second /= double(w) * w;
  CHECK(t.mu_pois == doctest::Approx(mu).epsilon(1e-12));
  CHECK(t.sigma2_pois == doctest::Approx(second).epsilon(1e-12));
  // Closed-form relative standard error.
  const double want =
      (std::log(2.0) / std::sqrt(double(m))) / std::sqrt(1 - std::exp(-n / m));
  CHECK(t.stderr_plain == doctest::Approx(want).epsilon(1e-9));
  CHECK(t.stderr_noisy == doctest::Approx(t.stderr_plain).epsilon(1e-12));
}

TEST_CASE("noise widens the theoretical error monotonically") {
  const uint32_t m = 4096, w = 16;
  const TheoryError t0 = theory_error(2e4, m, w, 0.0);
  const TheoryError t1 = theory_error(2e4, m, w, 100.0);
  const TheoryError t2 = theory_error(2e4, m, w, 300.0);
  CHECK(t0.stderr_noisy < t1.stderr_noisy);
  CHECK(t1.stderr_noisy < t2.stderr_noisy);
  // Multiplier form: stderr_noisy = stderr_plain *
  // sqrt(1 + sigma_noise^2 / (m w^2 sigma2_pois)).
  const double mult =
      std::sqrt(1 + 100.0 * 100.0 / (double(m) * w * w * t1.sigma2_pois));
  CHECK(t1.stderr_noisy ==
        doctest::Approx(t1.stderr_plain * mult).epsilon(1e-9));
}

TEST_CASE("run_experiment is deterministic and accurate without noise") {
  ExperimentSpec spec;
  spec.kind = SketchKind::FMS;
  spec.n = 20000;
  spec.m = 1024;
  spec.trials = 10;
  spec.seed = 3;
  const AareResult a = run_experiment(spec);
  const AareResult b = run_experiment(spec);
  REQUIRE(a.estimates.size() == 10);
  CHECK(a.estimates == b.estimates);
  CHECK(a.aare < 0.1);
  for (double est : a.estimates) {
    CHECK(est == doctest::Approx(20000.0).epsilon(0.2));
  }
}

TEST_CASE("distributed noise hurts accuracy but stays bounded at defaults") {
  ExperimentSpec plain;
  plain.kind = SketchKind::FMS;
  plain.n = 20000;
  plain.m = 4096;
  plain.trials = 30;
  plain.seed = 5;
  ExperimentSpec noisy = plain;
  noisy.mode = PrivacyMode::DISTRIBUTED_DISCRETE;
  const double aare_plain = run_experiment(plain).aare;
  const double aare_noisy = run_experiment(noisy).aare;
  CHECK(aare_noisy > aare_plain);
  CHECK(aare_noisy < 0.05);
}

TEST_CASE("width rules drive effective_w") {
  ExperimentSpec spec;
  spec.kind = SketchKind::FM;
  spec.n = 100000;
  spec.w = 0;
  CHECK(spec.effective_w() == default_w_fm(1e5));
  spec.kind = SketchKind::HLL;
  CHECK(spec.effective_w() == default_w_stochastic(1e5, spec.m));
  spec.w = 9;
  CHECK(spec.effective_w() == 9);
}

TEST_CASE("csv output is stable") {
  CHECK(csv_header() ==
        "kind,mode,n,m,w,eps,delta,d,trials,seed,aare,stddev_rel,"
        "stderr_plain,stderr_noisy");
  ExperimentSpec spec;
  spec.kind = SketchKind::LOGLOG;
  spec.n = 1000;
  spec.m = 256;
  spec.trials = 3;
  spec.seed = 8;
  const AareResult r1 = run_experiment(spec);
  const AareResult r2 = run_experiment(spec);
  CHECK(csv_row(spec, r1) == csv_row(spec, r2));
  CHECK(csv_row(spec, r1).find("loglog,none,1000,256,") == 0);
}
