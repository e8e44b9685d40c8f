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

#ifndef DPDICE_DPNOISE_HPP_
#define DPDICE_DPNOISE_HPP_

#include <cstdint>
#include <random>

namespace dpdice {

/// Scale of the integer-valued Gaussian N_Z(0, sigma^2).
struct DiscreteGaussianParams {
  double sigma;
};

enum class Statistic { FMS_Z, FM_ZSTAR, HLL_ZSHARP };

/// Worst-case change of a statistic when the input set gains or loses one
/// element. FMS_Z: 1. FM_ZSTAR: w*m. HLL_ZSHARP: (w-1)/m — one insert moves
/// at most one register by at most w-1, so the mean moves by (w-1)/m.
struct Sensitivity {
  Statistic statistic;
  double value;

  static Sensitivity fms_z() { return {Statistic::FMS_Z, 1.0}; }
  static Sensitivity fm_zstar(uint32_t w, uint32_t m) {
    return {Statistic::FM_ZSTAR, double(w) * m};
  }
  static Sensitivity hll_zsharp(uint32_t w, uint32_t m) {
    return {Statistic::HLL_ZSHARP, double(w - 1) / m};
  }
};

/// A fully resolved privacy configuration: the (eps, delta)-DP target, the
/// number of noise contributors, the concentrated-DP parameter achieved and
/// the per-contributor discrete Gaussian scale that achieves it.
struct PrivacyBudget {
  double eps_dp;
  double delta;
  uint32_t d;
  double eps_cdp;
  double sigma;
};

/// Exact rejection sampler for N_Z(0, sigma^2): draws a two-sided geometric
/// proposal of scale t = floor(sigma)+1 and accepts with probability
/// exp(-(|Y| - sigma^2/t)^2 / (2 sigma^2)). No tail truncation.
int64_t sample_discrete_gaussian(const DiscreteGaussianParams& params,
                                 std::mt19937_64& rng);

/// CDP parameter of releasing a sensitivity-1 statistic plus the sum of d
/// independent N_Z(0, sigma^2) samples:
///   eps_d = min( sqrt(1/(d sigma^2) + tau_d/2),  1/(sqrt(d) sigma) + tau_d )
/// with tau_d = 10 * sum_{k=1}^{d-1} exp(-2 k pi^2 sigma^2 / (k+1)).
/// Requires sigma >= 0.5.
double epsilon_d(double sigma, uint32_t d);

/// Closed-form (eps, delta)-DP bound for a (1/2)eps_cdp^2-CDP mechanism:
/// 0.5 * eps * (eps + 2 sqrt(-2 ln delta)).
double cdp_to_dp(double eps_cdp, double delta);

/// Tighter conversion: inf over alpha > 1 of
/// 0.5 eps^2 alpha + ln(1/(alpha delta))/(alpha-1) + ln(1 - 1/alpha).
double cdp_to_dp_infimum(double eps_cdp, double delta);

/// Finds the smallest per-contributor sigma in [0.5, 1e6] whose released
/// statistic meets the (eps, delta)-DP target under the closed-form
/// conversion. For d >= 2 the residual view of a curious contributor, which
/// sees the statistic plus only d-1 noise samples, is guarded as well; that
/// constraint is the binding one.
PrivacyBudget calibrate_sigma(double eps_dp_target, double delta, uint32_t d);

/// Central-baseline scale: sigma = sensitivity / eps_c where eps_c solves
/// 0.5 eps_c (eps_c + 2 sqrt(-2 ln delta)) = eps_dp_target.
double central_gaussian_sigma(double sensitivity, double eps_dp_target,
                              double delta);

/// The eps_c solution above, exposed for reporting.
double central_cdp_epsilon(double eps_dp_target, double delta);

}  // namespace dpdice

#endif  // DPDICE_DPNOISE_HPP_
