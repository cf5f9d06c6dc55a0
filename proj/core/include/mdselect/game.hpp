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

#ifndef MDSELECT_GAME_HPP
#define MDSELECT_GAME_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mdselect/feature_set.hpp"

namespace mdselect {

/// Enumeration limits for the exact routines. Each is the largest n for
/// which the routine stays within a few seconds on one core.
struct Capacity {
  /// exact_lambda, exact_shapley, expected_payoff: 2^n coalitions.
  static constexpr int kExact = 25;
  /// verify_expected_shapley: 2^n carrier games, each enumerated over 2^n.
  static constexpr int kExpectedShapley = 12;
  /// verify_ordering_representation: all n! orderings.
  static constexpr int kOrderings = 8;
};

/// Probability that the random true model equals a given coalition of size
/// t among n candidates under the matched prior: t!(n-t)!/(n+1)!.
/// Throws DomainError unless 0 <= t <= n and 1 <= n <= 63.
double prior_mass(int t, int n);

/// Weight of the marginal effect v(T+i) - v(T) in the Shapley value for a
/// coalition of size t < n: t!(n-t-1)!/n!.
double shapley_weight(int t, int n);

/// Size-indexed table of the matched prior. The mass of a coalition depends
/// only on its size, so n+1 entries describe the whole distribution.
class MatchedPrior {
 public:
  explicit MatchedPrior(int n);

  int n() const { return n_; }
  double mass(int t) const { return mass_.at(t); }
  double log_mass(int t) const { return log_mass_.at(t); }
  /// Probability that the true model has t features; 1/(n+1) for every t.
  double size_probability(int t) const;
  /// Sum over all 2^n coalitions of their mass.
  double total_mass() const;

  /// Test hook: a copy with the mass of size t scaled by `factor`. The
  /// result is no longer a probability distribution.
  MatchedPrior perturbed(int t, double factor) const;

 private:
  int n_;
  std::vector<double> log_mass_;
  std::vector<double> mass_;
};

/// A coalitional game v: 2^N -> R with a memoized, thread-safe payoff.
///
/// Copies share one cache. restricted(S) returns the carrier game
/// v_S(T) = v(S & T), which intersects before the cache lookup and so
/// reuses every value already computed for v.
class GameOracle {
 public:
  using Payoff = std::function<double(FeatureSet)>;

  GameOracle(int n, Payoff payoff);

  int n() const { return n_; }
  double value(FeatureSet t) const;

  GameOracle restricted(FeatureSet carrier) const;
  FeatureSet carrier() const { return FeatureSet(n_, mask_); }

  /// Number of value() calls on this game and all copies sharing its cache.
  std::uint64_t lookups() const;
  /// Number of distinct coalitions whose payoff has been computed.
  std::uint64_t distinct_evaluations() const;
  void clear_cache();

 private:
  struct State;
  int n_;
  FeatureSet::Bits mask_;
  std::shared_ptr<State> state_;
};

/// Expected marginal effect of feature i under the matched prior.
double exact_lambda(const GameOracle& game, int i);
double exact_lambda(const GameOracle& game, int i, const MatchedPrior& prior);
/// exact_lambda for every feature, in index order.
std::vector<double> exact_lambdas(const GameOracle& game);

double exact_shapley(const GameOracle& game, int i);
std::vector<double> exact_shapleys(const GameOracle& game);

/// E v(S) for S drawn from the matched prior.
double expected_payoff(const GameOracle& game);
double expected_payoff(const GameOracle& game, const MatchedPrior& prior);

/// sum_i lambda_i - (E v(S) - v(empty)). Zero for every game when the prior
/// is the matched one.
double verify_matching(const GameOracle& game);
double verify_matching(const GameOracle& game, const MatchedPrior& prior);

/// max_i |E_Z Shapley_i[v_Z] - lambda_i| with Z drawn from the matched
/// prior and v_Z the carrier game of Z.
double verify_expected_shapley(const GameOracle& game);

/// max_i of the gap between lambda_i and the average over all n! orderings
/// of (n - p)/(n + 1) times the sequential marginal effect at position p.
double verify_ordering_representation(const GameOracle& game);

}  // namespace mdselect

#endif  // MDSELECT_GAME_HPP
