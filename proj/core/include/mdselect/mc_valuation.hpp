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

#ifndef MDSELECT_MC_VALUATION_HPP
#define MDSELECT_MC_VALUATION_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mdselect/game.hpp"
#include "mdselect/rng.hpp"

namespace mdselect {

struct OrderingSampleConfig {
  /// Number of random orderings. Values below 100 are accepted with a
  /// warning; at least 2 are required.
  std::int64_t gamma = 100;
  std::uint64_t seed = 0;
  double alpha = 0.05;

  void validate() const;
};

struct FeatureEstimate {
  double lambda_hat = 0.0;
  /// Standard error of lambda_hat.
  double sigma_hat = 0.0;
  /// lambda_hat / sigma_hat; 0 when both vanish and +-inf when only
  /// sigma_hat does.
  double z = 0.0;
};

struct ValuationEstimate {
  std::vector<FeatureEstimate> features;
  std::int64_t samples = 0;
};

/// Two-sided standard normal critical value z_{1-alpha/2}.
double critical_value(double alpha);

/// Standard normal quantile, accurate to about 1e-15 on (0, 1).
double normal_quantile(double p);

/// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<int> sample_ordering(int n, Rng& rng);

/// Walks the prefix chain of `tau` and returns, for every feature, its
/// sequential marginal effect weighted by (n - p)/(n + 1), p being the
/// feature's 0-based position. Calls game.value exactly n + 1 times.
std::vector<double> weighted_increments(const GameOracle& game,
                                        std::span<const int> tau);

/// Monte Carlo estimate of every lambda_i from cfg.gamma random orderings.
/// Ordering k draws from the stream derive_seed(cfg.seed, {k}); orderings
/// are accumulated in fixed-size chunks merged in chunk order, so the
/// result is bit-identical for any thread count.
ValuationEstimate estimate(const GameOracle& game,
                           const OrderingSampleConfig& cfg, int threads = 1);

/// relevant[i] is true iff |z_i| >= critical_value(alpha).
std::vector<bool> decide(const ValuationEstimate& est, double alpha);

}  // namespace mdselect

#endif  // MDSELECT_MC_VALUATION_HPP
