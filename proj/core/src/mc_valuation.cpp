/*
 * Copyright 2026 The mdselect Authors.
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

#include "mdselect/mc_valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mdselect/errors.hpp"
#include "mdselect/parallel.hpp"
#include "mdselect/warnings.hpp"

namespace mdselect {
namespace {

// Orderings per accumulation chunk. Fixed, so the summation tree does not
// depend on the thread count.
constexpr std::int64_t kChunk = 64;

// Running sum plus Welford mean and centered second moment per feature.
// Identical draws leave m2 exactly zero.
struct Accumulator {
  std::int64_t count = 0;
  std::vector<double> sum;
  std::vector<double> mean;
  std::vector<double> m2;
  explicit Accumulator(int n) : sum(n, 0.0), mean(n, 0.0), m2(n, 0.0) {}

  void add(const std::vector<double>& x) {
    ++count;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[i] += x[i];
      const double delta = x[i] - mean[i];
      mean[i] += delta / static_cast<double>(count);
      m2[i] += delta * (x[i] - mean[i]);
    }
  }

  void merge(const Accumulator& other) {
    if (other.count == 0) return;
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double nt = na + nb;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double delta = other.mean[i] - mean[i];
      sum[i] += other.sum[i];
      mean[i] += delta * nb / nt;
      m2[i] += other.m2[i] + delta * delta * na * nb / nt;
    }
    count += other.count;
  }
};

}  // namespace

void OrderingSampleConfig::validate() const {
  if (gamma < 2) {
    throw ConfigError("ordering sample size gamma must be at least 2, got " +
                      std::to_string(gamma));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("significance level alpha must lie in (0, 1)");
  }
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal quantile needs p in [0, 1]");
  }
  // 1 - p is exact for p >= 0.5, and the lower tail avoids cancellation in
  // the refinement step below.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  // Acklam's rational approximation (relative error 1.15e-9) followed by one
  // Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("significance level alpha must lie in (0, 1)");
  }
  return normal_quantile(1.0 - alpha / 2.0);
}

std::vector<int> sample_ordering(int n, Rng& rng) {
  if (n < 1) throw DomainError("ordering needs at least one feature");
  std::vector<int> tau(n);
  std::iota(tau.begin(), tau.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(tau[i], tau[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
  }
  return tau;
}

std::vector<double> weighted_increments(const GameOracle& game,
                                        std::span<const int> tau) {
  const int n = game.n();
  if (static_cast<int>(tau.size()) != n) {
    throw DomainError("ordering length does not match the game");
  }
  std::vector<double> out(n, 0.0);
  std::vector<bool> seen(n, false);
  FeatureSet prefix = FeatureSet::empty(n);
  double before = game.value(prefix);
  for (int p = 0; p < n; ++p) {
    const int i = tau[p];
    if (i < 0 || i >= n || seen[i]) throw DomainError("ordering is not a permutation");
    seen[i] = true;
    prefix = prefix.with(i);
    const double after = game.value(prefix);
    out[i] = static_cast<double>(n - p) / (n + 1) * (after - before);
    before = after;
  }
  return out;
}

ValuationEstimate estimate(const GameOracle& game, const OrderingSampleConfig& cfg,
                           int threads) {
  cfg.validate();
  if (cfg.gamma < 100) {
    warn("gamma = " + std::to_string(cfg.gamma) +
         " is below the recommended minimum of 100 orderings");
  }
  const int n = game.n();
  const std::int64_t chunks = (cfg.gamma + kChunk - 1) / kChunk;
  std::vector<Accumulator> partial(static_cast<std::size_t>(chunks), Accumulator(n));

  parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
    Accumulator& acc = partial[c];
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(cfg.gamma, begin + kChunk);
    for (std::int64_t k = begin; k < end; ++k) {
      Rng rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(k)});
      const std::vector<int> tau = sample_ordering(n, rng);
      acc.add(weighted_increments(game, tau));
    }
  });

  Accumulator total(n);
  for (const Accumulator& acc : partial) total.merge(acc);

  const double g = static_cast<double>(cfg.gamma);
  ValuationEstimate est;
  est.samples = cfg.gamma;
  est.features.resize(n);
  for (int i = 0; i < n; ++i) {
    FeatureEstimate& f = est.features[i];
    f.lambda_hat = total.sum[i] / g;
    // Population variance of the draws, i.e. the mean square minus the
    // squared mean.
    const double var = std::max(total.m2[i] / g, 0.0);
    f.sigma_hat = std::sqrt(var) / std::sqrt(g);
    if (f.sigma_hat > 0.0) {
      f.z = f.lambda_hat / f.sigma_hat;
    } else if (f.lambda_hat == 0.0) {
      f.z = 0.0;
    } else {
      f.z = std::copysign(std::numeric_limits<double>::infinity(), f.lambda_hat);
    }
  }
  return est;
}

std::vector<bool> decide(const ValuationEstimate& est, double alpha) {
  const double crit = critical_value(alpha);
  std::vector<bool> relevant(est.features.size());
  for (std::size_t i = 0; i < est.features.size(); ++i) {
    relevant[i] = std::abs(est.features[i].z) >= crit;
  }
  return relevant;
}

}  // namespace mdselect
