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

#include "dpdice/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dpdice/hash.hpp"

namespace dpdice::bench {

namespace {

std::vector<uint8_t> element_bytes(uint64_t e) {
  std::vector<uint8_t> b(8);
  for (int i = 0; i < 8; ++i) b[i] = uint8_t(e >> (8 * i));
  return b;
}

// Sensitivity of the summed statistic the noise is added to: Z for FMS,
// Z* for FM, the register sum (m times the mean Z#) for HLL/LogLog.
double sum_sensitivity(SketchKind kind, uint32_t m, uint32_t w) {
  switch (kind) {
    case SketchKind::FMS:
      return Sensitivity::fms_z().value;
    case SketchKind::FM:
      return Sensitivity::fm_zstar(w, m).value;
    case SketchKind::HLL:
    case SketchKind::LOGLOG:
      return Sensitivity::hll_zsharp(w, m).value * double(m);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

std::string to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::FMS:
      return "fms";
    case SketchKind::FM:
      return "fm";
    case SketchKind::HLL:
      return "hll";
    case SketchKind::LOGLOG:
      return "loglog";
  }
  return "?";
}

std::string to_string(PrivacyMode mode) {
  switch (mode) {
    case PrivacyMode::NONE:
      return "none";
    case PrivacyMode::CENTRAL_GAUSS:
      return "central";
    case PrivacyMode::DISTRIBUTED_DISCRETE:
      return "distributed";
  }
  return "?";
}

uint32_t ExperimentSpec::effective_w() const {
  if (w != 0) return w;
  if (kind == SketchKind::FM) return default_w_fm(double(n));
  return default_w_stochastic(double(n), m);
}

TheoryError theory_error(double n, uint32_t m, uint32_t w,
                         double sigma_noise) {
  if (n < 0) throw std::invalid_argument("theory_error: n < 0");
  TheoryError out;
  double mu = 0.0, var = 0.0;
  for (uint32_t x = 0; x < w; ++x) {
    const double p_x = (x + 1 < w) ? std::ldexp(1.0, -int(x) - 1) / m
                                   : std::ldexp(1.0, -int(w) + 1) / m;
    const double e1 = std::exp(-n * p_x);
    mu += e1;
    var += e1 - e1 * e1;
  }
  out.mu_pois = mu / w;
  out.sigma2_pois = var / (double(w) * w);
  if (n == 0.0 || out.sigma2_pois == 0.0) return out;
  out.stderr_plain = (std::log(2.0) / std::sqrt(double(m))) /
                     std::sqrt(1.0 - std::exp(-n / double(m)));
  // The noisy limit carries variance sigma2_pois + sigma^2/(m w^2).
  out.stderr_noisy =
      out.stderr_plain *
      std::sqrt(1.0 + sigma_noise * sigma_noise /
                          (double(m) * w * w * out.sigma2_pois));
  return out;
}

std::vector<std::vector<uint64_t>> gen_union_partition(uint64_t n, uint32_t d,
                                                       double overlap,
                                                       uint64_t seed) {
  if (d == 0) throw std::invalid_argument("need at least one holder");
  if (overlap < 0.0 || overlap > 1.0) {
    throw std::invalid_argument("overlap must be in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<uint64_t>> sets(d);
  const uint64_t base = rng();
  const auto duplicated = uint64_t(overlap * double(n));
  std::uniform_int_distribution<uint32_t> pick(0, d - 1);
  for (uint64_t i = 0; i < n; ++i) {
    const uint64_t e = base + i;  // distinct by construction
    const uint32_t first = pick(rng);
    sets[first].push_back(e);
    if (i < duplicated && d >= 2) {
      uint32_t second = pick(rng);
      while (second == first) second = pick(rng);
      sets[second].push_back(e);
    }
  }
  return sets;
}

AareResult run_experiment(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const uint32_t w = spec.effective_w();
  const double sensitivity = sum_sensitivity(spec.kind, spec.m, w);

  double dist_sigma = 0.0;
  double central_sigma = 0.0;
  if (spec.mode == PrivacyMode::DISTRIBUTED_DISCRETE) {
    dist_sigma =
        calibrate_sigma(spec.eps, spec.delta, spec.d).sigma * sensitivity;
  } else if (spec.mode == PrivacyMode::CENTRAL_GAUSS) {
    central_sigma = central_gaussian_sigma(sensitivity, spec.eps, spec.delta);
  }

  AareResult result;
  result.trials = spec.trials;
  result.estimates.reserve(spec.trials);
  for (uint32_t t = 0; t < spec.trials; ++t) {
    std::mt19937_64 rng(spec.seed ^ (0x9e3779b97f4a7c15ULL * (t + 1)));
    HashKey key = HashKey::from_seed(rng());
    const uint64_t base = rng();

    double statistic = 0.0;
    double stat_max = 0.0;
    Estimate estimate;
    bool direct_hll = false;
    HllSketch hll(1, 4);
    if (spec.kind == SketchKind::FMS) {
      FmsSketch sk(spec.m, w);
      for (uint64_t i = 0; i < spec.n; ++i) {
        sk.insert(key, element_bytes(base + i));
      }
      statistic = double(sk.zero_count());
      stat_max = double(spec.m) * w;
    } else if (spec.kind == SketchKind::FM) {
      FmSketch sk(spec.m, w);
      for (uint64_t i = 0; i < spec.n; ++i) {
        sk.insert(key, element_bytes(base + i));
      }
      statistic = double(sk.zstar());
      stat_max = double(spec.m) * w;
    } else {
      HllSketch sk(spec.m, w);
      for (uint64_t i = 0; i < spec.n; ++i) {
        sk.insert(key, element_bytes(base + i));
      }
      statistic = double(sk.register_sum());
      stat_max = double(spec.m) * (w - 1);
      if (spec.kind == SketchKind::HLL && spec.mode == PrivacyMode::NONE) {
        hll = sk;
        direct_hll = true;
      }
    }

    if (spec.mode == PrivacyMode::DISTRIBUTED_DISCRETE) {
      for (uint32_t j = 0; j < spec.d; ++j) {
        statistic +=
            double(sample_discrete_gaussian({dist_sigma}, rng));
      }
      direct_hll = false;
    } else if (spec.mode == PrivacyMode::CENTRAL_GAUSS) {
      std::normal_distribution<double> gauss(0.0, central_sigma);
      statistic += gauss(rng);
      direct_hll = false;
    }
    statistic = std::clamp(statistic, 0.0, stat_max);

    if (direct_hll) {
      estimate = hll_estimate(hll);
    } else if (spec.kind == SketchKind::FMS) {
      estimate = fms_estimate(statistic, spec.m, w);
    } else if (spec.kind == SketchKind::FM) {
      estimate = fm_estimate(statistic, spec.m);
    } else {
      estimate = loglog_estimate(statistic, spec.m);
    }
    result.estimates.push_back(estimate.n_hat);
  }

  const double n = double(spec.n);
  double aare = 0.0, mean_rel = 0.0;
  for (double e : result.estimates) {
    aare += std::abs(e - n) / n;
    mean_rel += e / n;
  }
  aare /= result.estimates.size();
  mean_rel /= result.estimates.size();
  double ss = 0.0;
  for (double e : result.estimates) {
    const double dev = e / n - mean_rel;
    ss += dev * dev;
  }
  result.aare = aare;
  result.stddev_rel = result.estimates.size() > 1
                          ? std::sqrt(ss / (result.estimates.size() - 1))
                          : 0.0;
  return result;
}

std::string csv_header() {
  return "kind,mode,n,m,w,eps,delta,d,trials,seed,aare,stddev_rel,"
         "stderr_plain,stderr_noisy";
}

std::string csv_row(const ExperimentSpec& spec, const AareResult& result) {
  const uint32_t w = spec.effective_w();
  double sigma_noise = 0.0;
  if (spec.mode == PrivacyMode::DISTRIBUTED_DISCRETE) {
    sigma_noise = calibrate_sigma(spec.eps, spec.delta, spec.d).sigma *
                  sum_sensitivity(spec.kind, spec.m, w) *
                  std::sqrt(double(spec.d));
  } else if (spec.mode == PrivacyMode::CENTRAL_GAUSS) {
    sigma_noise = central_gaussian_sigma(
        sum_sensitivity(spec.kind, spec.m, w), spec.eps, spec.delta);
  }
  const TheoryError theory =
      theory_error(double(spec.n), spec.m, w, sigma_noise);
  std::ostringstream out;
  out << to_string(spec.kind) << ',' << to_string(spec.mode) << ',' << spec.n
      << ',' << spec.m << ',' << w << ',' << spec.eps << ',' << spec.delta
      << ',' << spec.d << ',' << spec.trials << ',' << spec.seed << ','
      << result.aare << ',' << result.stddev_rel << ',' << theory.stderr_plain
      << ',' << theory.stderr_noisy;
  return out.str();
}

}  // namespace dpdice::bench
