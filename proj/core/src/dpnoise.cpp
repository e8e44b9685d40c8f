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

#include "dpdice/dpnoise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpdice {
namespace {

bool bernoulli(double p, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Bernoulli(exp(-gamma)) for gamma in [0, 1] without evaluating exp():
// run K = 1, 2, ... while Bernoulli(gamma/K) succeeds; the stopping index
// is odd with probability exp(-gamma).
bool bernoulli_exp_le1(double gamma, std::mt19937_64& rng) {
  uint64_t k = 1;
  while (bernoulli(gamma / double(k), rng)) ++k;
  return (k % 2) == 1;
}

bool bernoulli_exp(double gamma, std::mt19937_64& rng) {
  while (gamma > 1.0) {
    if (!bernoulli_exp_le1(1.0, rng)) return false;
    gamma -= 1.0;
  }
  return bernoulli_exp_le1(gamma, rng);
}

// Two-sided geometric (discrete Laplace) with PMF proportional to
// exp(-|x| / t).
int64_t sample_discrete_laplace(int64_t t, std::mt19937_64& rng) {
  std::uniform_int_distribution<int64_t> pick(0, t - 1);
  for (;;) {
    const int64_t u = pick(rng);
    if (!bernoulli_exp(double(u) / double(t), rng)) continue;
    int64_t v = 0;
    while (bernoulli_exp_le1(1.0, rng)) ++v;
    const int64_t x = u + t * v;
    const bool negative = bernoulli(0.5, rng);
    if (negative && x == 0) continue;
    return negative ? -x : x;
  }
}

}  // namespace

int64_t sample_discrete_gaussian(const DiscreteGaussianParams& params,
                                 std::mt19937_64& rng) {
  const double sigma = params.sigma;
  if (!(sigma > 0)) {
    throw std::invalid_argument("sample_discrete_gaussian: sigma must be > 0");
  }
  const int64_t t = int64_t(std::floor(sigma)) + 1;
  const double sigma2 = sigma * sigma;
  for (;;) {
    const int64_t y = sample_discrete_laplace(t, rng);
    const double dev = std::abs(double(y)) - sigma2 / double(t);
    if (bernoulli_exp(dev * dev / (2.0 * sigma2), rng)) return y;
  }
}

double epsilon_d(double sigma, uint32_t d) {
  if (sigma < 0.5) {
    throw std::invalid_argument("epsilon_d: requires sigma >= 0.5");
  }
  if (d < 1) throw std::invalid_argument("epsilon_d: requires d >= 1");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  double tau = 0.0;
  for (uint32_t k = 1; k < d; ++k) {
    tau += std::exp(-2.0 * k * pi2 * sigma * sigma / double(k + 1));
  }
  tau *= 10.0;
  const double branch_a = std::sqrt(1.0 / (d * sigma * sigma) + tau / 2.0);
  const double branch_b = 1.0 / (std::sqrt(double(d)) * sigma) + tau;
  return std::min(branch_a, branch_b);
}

double cdp_to_dp(double eps_cdp, double delta) {
  if (!(eps_cdp > 0) || !(delta > 0) || !(delta < 1)) {
    throw std::invalid_argument("cdp_to_dp: invalid parameters");
  }
  return 0.5 * eps_cdp * (eps_cdp + 2.0 * std::sqrt(-2.0 * std::log(delta)));
}

double cdp_to_dp_infimum(double eps_cdp, double delta) {
  if (!(eps_cdp > 0) || !(delta > 0) || !(delta < 1)) {
    throw std::invalid_argument("cdp_to_dp_infimum: invalid parameters");
  }
  const auto objective = [&](double alpha) {
    return 0.5 * eps_cdp * eps_cdp * alpha +
           std::log(1.0 / (alpha * delta)) / (alpha - 1.0) +
           std::log(1.0 - 1.0 / alpha);
  };
  // Golden-section search on log(alpha - 1); the objective is unimodal.
  double lo = -30.0, hi = 40.0;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - gr * (hi - lo);
  double b = lo + gr * (hi - lo);
  double fa = objective(1.0 + std::exp(a));
  double fb = objective(1.0 + std::exp(b));
  for (int i = 0; i < 200; ++i) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = objective(1.0 + std::exp(a));
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = objective(1.0 + std::exp(b));
    }
  }
  return std::min(objective(1.0 + std::exp(0.5 * (lo + hi))),
                  cdp_to_dp(eps_cdp, delta));
}

PrivacyBudget calibrate_sigma(double eps_dp_target, double delta, uint32_t d) {
  if (!(eps_dp_target > 0) || d < 1) {
    throw std::invalid_argument("calibrate_sigma: invalid parameters");
  }
  const auto guaranteed_dp = [&](double sigma) {
    double dp = cdp_to_dp(epsilon_d(sigma, d), delta);
    if (d >= 2) {
      // A curious contributor can subtract its own sample and is left with
      // the statistic plus d-1 noise terms; that view must meet the target
      // too.
      dp = std::max(dp, cdp_to_dp(epsilon_d(sigma, d - 1), delta));
    }
    return dp;
  };
  double lo = 0.5, hi = 1e6;
  if (guaranteed_dp(hi) > eps_dp_target) {
    throw std::runtime_error("calibrate_sigma: target unreachable at sigma=1e6");
  }
  if (guaranteed_dp(lo) > eps_dp_target) {
    while ((hi - lo) > 1e-6 * hi) {
      const double mid = 0.5 * (lo + hi);
      if (guaranteed_dp(mid) <= eps_dp_target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  } else {
    hi = lo;
  }
  const double sigma = hi;
  return PrivacyBudget{eps_dp_target, delta, d, epsilon_d(sigma, d), sigma};
}

double central_cdp_epsilon(double eps_dp_target, double delta) {
  const double s = std::sqrt(-2.0 * std::log(delta));
  return -s + std::sqrt(s * s + 2.0 * eps_dp_target);
}

double central_gaussian_sigma(double sensitivity, double eps_dp_target,
                              double delta) {
  if (!(sensitivity > 0) || !(eps_dp_target > 0)) {
    throw std::invalid_argument("central_gaussian_sigma: invalid parameters");
  }
  return sensitivity / central_cdp_epsilon(eps_dp_target, delta);
}

}  // namespace dpdice
