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

#ifndef DPDICE_BENCH_HPP_
#define DPDICE_BENCH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dpdice/dpnoise.hpp"
#include "dpdice/sketch.hpp"

namespace dpdice::bench {

enum class SketchKind { FMS, FM, HLL, LOGLOG };

enum class PrivacyMode { NONE, CENTRAL_GAUSS, DISTRIBUTED_DISCRETE };

std::string to_string(SketchKind kind);
std::string to_string(PrivacyMode mode);

struct ExperimentSpec {
  SketchKind kind = SketchKind::FMS;
  uint64_t n = 1'000'000;
  uint32_t m = 4096;
  uint32_t w = 0;  // 0 selects the width rule for the kind and n
  PrivacyMode mode = PrivacyMode::NONE;
  double eps = 0.1;
  double delta = 1e-12;
  uint32_t d = 20;
  uint32_t trials = 100;
  uint64_t seed = 1;

  uint32_t effective_w() const;
};

struct TheoryError {
  double mu_pois = 0.0;
  double sigma2_pois = 0.0;
  double stderr_plain = 0.0;
  double stderr_noisy = 0.0;
};

/// Poissonized expectation/variance of the per-array one-fraction, and the
/// relative standard error of the estimate with and without noise of scale
/// sigma_noise on Z.
TheoryError theory_error(double n, uint32_t m, uint32_t w,
                         double sigma_noise);

struct AareResult {
  double aare = 0.0;
  double stddev_rel = 0.0;  // stddev of n_hat / n
  uint32_t trials = 0;
  std::vector<double> estimates;
};

/// Splits a universe of exactly n distinct elements over d holders; every
/// element lands in at least one set, and floor(overlap * n) land in at
/// least two.
std::vector<std::vector<uint64_t>> gen_union_partition(uint64_t n, uint32_t d,
                                                       double overlap,
                                                       uint64_t seed);

/// T independent trials with fresh keys and noise; returns the mean
/// absolute relative error of the estimates.
AareResult run_experiment(const ExperimentSpec& spec);

/// Stable column order:
/// kind,mode,n,m,w,eps,delta,d,trials,seed,aare,stddev_rel,
/// stderr_plain,stderr_noisy
std::string csv_header();
std::string csv_row(const ExperimentSpec& spec, const AareResult& result);

}  // namespace dpdice::bench

#endif  // DPDICE_BENCH_HPP_
