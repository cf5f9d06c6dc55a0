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

#include "mdselect/game.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>

#include "kahan.hpp"
#include "mdselect/errors.hpp"

namespace mdselect {
namespace {

using detail::KahanSum;

void check_prior_args(int t, int n) {
  if (n < 1 || n > FeatureSet::kMaxFeatures) {
    throw DomainError("prior: feature count must be in [1, 63], got " +
                      std::to_string(n));
  }
  if (t < 0 || t > n) {
    throw DomainError("prior: coalition size " + std::to_string(t) +
                      " outside [0, " + std::to_string(n) + "]");
  }
}

double log_prior_mass(int t, int n) {
  return std::lgamma(t + 1.0) + std::lgamma(n - t + 1.0) - std::lgamma(n + 2.0);
}

void check_capacity(const GameOracle& game, int limit, const char* what) {
  if (game.n() > limit) {
    throw CapacityError(std::string(what) + ": n = " + std::to_string(game.n()) +
                        " exceeds the enumeration limit of " +
                        std::to_string(limit) +
                        "; use the Monte Carlo estimator instead");
  }
}

void check_feature(const GameOracle& game, int i) {
  if (i < 0 || i >= game.n()) {
    throw DomainError("feature index " + std::to_string(i) +
                      " out of range for n = " + std::to_string(game.n()));
  }
}

// Sum over coalitions T not containing i of weight(|T|) * (v(T+i) - v(T)).
template <typename Weight>
double weighted_marginal_sum(const GameOracle& game, int i, Weight weight) {
  const int n = game.n();
  const FeatureSet::Bits bit = FeatureSet::Bits{1} << i;
  const FeatureSet::Bits end = FeatureSet::Bits{1} << n;
  KahanSum sum;
  for (FeatureSet::Bits mask = 0; mask < end; ++mask) {
    if (mask & bit) continue;
    const double gain =
        game.value(FeatureSet(n, mask | bit)) - game.value(FeatureSet(n, mask));
    sum.add(weight(std::popcount(mask)) * gain);
  }
  return sum.value();
}

}  // namespace

double prior_mass(int t, int n) {
  check_prior_args(t, n);
  return std::exp(log_prior_mass(t, n));
}

double shapley_weight(int t, int n) {
  check_prior_args(t, n);
  if (t == n) throw DomainError("shapley weight needs t < n");
  return std::exp(std::lgamma(t + 1.0) + std::lgamma(n - t + 0.0) -
                  std::lgamma(n + 1.0));
}

MatchedPrior::MatchedPrior(int n) : n_(n) {
  check_prior_args(0, n);
  log_mass_.resize(n + 1);
  mass_.resize(n + 1);
  for (int t = 0; t <= n; ++t) {
    log_mass_[t] = log_prior_mass(t, n);
    mass_[t] = std::exp(log_mass_[t]);
  }
}

double MatchedPrior::size_probability(int t) const {
  // C(n, t) * mass(t), formed in log space.
  const double log_binom =
      std::lgamma(n_ + 1.0) - std::lgamma(t + 1.0) - std::lgamma(n_ - t + 1.0);
  return std::exp(log_binom + log_mass_.at(t));
}

double MatchedPrior::total_mass() const {
  KahanSum sum;
  for (int t = 0; t <= n_; ++t) sum.add(size_probability(t));
  return sum.value();
}

MatchedPrior MatchedPrior::perturbed(int t, double factor) const {
  MatchedPrior out = *this;
  out.mass_.at(t) *= factor;
  out.log_mass_.at(t) += std::log(factor);
  return out;
}

struct GameOracle::State {
  Payoff payoff;
  mutable std::shared_mutex mutex;
  std::unordered_map<FeatureSet::Bits, double> cache;
  std::atomic<std::uint64_t> lookups{0};
};

GameOracle::GameOracle(int n, Payoff payoff)
    : n_(n), mask_(FeatureSet::full(n).bits()), state_(std::make_shared<State>()) {
  if (!payoff) throw DomainError("game payoff must be callable");
  state_->payoff = std::move(payoff);
}

double GameOracle::value(FeatureSet t) const {
  if (t.n() != n_) {
    throw DomainError("coalition over n = " + std::to_string(t.n()) +
                      " passed to a game with n = " + std::to_string(n_));
  }
  const FeatureSet::Bits key = t.bits() & mask_;
  state_->lookups.fetch_add(1, std::memory_order_relaxed);
  {
    std::shared_lock lock(state_->mutex);
    if (auto it = state_->cache.find(key); it != state_->cache.end()) {
      return it->second;
    }
  }
  // Computed outside the lock; a concurrent duplicate computes the same
  // value and the first insertion wins.
  const double v = state_->payoff(FeatureSet(n_, key));
  std::unique_lock lock(state_->mutex);
  return state_->cache.try_emplace(key, v).first->second;
}

GameOracle GameOracle::restricted(FeatureSet carrier) const {
  if (carrier.n() != n_) throw DomainError("carrier over a different universe");
  GameOracle out = *this;
  out.mask_ &= carrier.bits();
  return out;
}

std::uint64_t GameOracle::lookups() const {
  return state_->lookups.load(std::memory_order_relaxed);
}

std::uint64_t GameOracle::distinct_evaluations() const {
  std::shared_lock lock(state_->mutex);
  return state_->cache.size();
}

void GameOracle::clear_cache() {
  std::unique_lock lock(state_->mutex);
  state_->cache.clear();
}

double exact_lambda(const GameOracle& game, int i) {
  check_capacity(game, Capacity::kExact, "exact_lambda");
  return exact_lambda(game, i, MatchedPrior(game.n()));
}

double exact_lambda(const GameOracle& game, int i, const MatchedPrior& prior) {
  check_capacity(game, Capacity::kExact, "exact_lambda");
  check_feature(game, i);
  if (prior.n() != game.n()) throw DomainError("prior and game sizes differ");
  return weighted_marginal_sum(game, i, [&](int t) { return prior.mass(t); });
}

std::vector<double> exact_lambdas(const GameOracle& game) {
  check_capacity(game, Capacity::kExact, "exact_lambda");
  const MatchedPrior prior(game.n());
  std::vector<double> out(game.n());
  for (int i = 0; i < game.n(); ++i) out[i] = exact_lambda(game, i, prior);
  return out;
}

double exact_shapley(const GameOracle& game, int i) {
  check_capacity(game, Capacity::kExact, "exact_shapley");
  check_feature(game, i);
  const int n = game.n();
  std::vector<double> weight(n);
  for (int t = 0; t < n; ++t) weight[t] = shapley_weight(t, n);
  return weighted_marginal_sum(game, i, [&](int t) { return weight[t]; });
}

std::vector<double> exact_shapleys(const GameOracle& game) {
  std::vector<double> out(game.n());
  for (int i = 0; i < game.n(); ++i) out[i] = exact_shapley(game, i);
  return out;
}

double expected_payoff(const GameOracle& game) {
  check_capacity(game, Capacity::kExact, "expected_payoff");
  return expected_payoff(game, MatchedPrior(game.n()));
}

double expected_payoff(const GameOracle& game, const MatchedPrior& prior) {
  check_capacity(game, Capacity::kExact, "expected_payoff");
  if (prior.n() != game.n()) throw DomainError("prior and game sizes differ");
  const int n = game.n();
  const FeatureSet::Bits end = FeatureSet::Bits{1} << n;
  KahanSum sum;
  for (FeatureSet::Bits mask = 0; mask < end; ++mask) {
    sum.add(prior.mass(std::popcount(mask)) * game.value(FeatureSet(n, mask)));
  }
  return sum.value();
}

double verify_matching(const GameOracle& game) {
  check_capacity(game, Capacity::kExact, "verify_matching");
  return verify_matching(game, MatchedPrior(game.n()));
}

double verify_matching(const GameOracle& game, const MatchedPrior& prior) {
  KahanSum sum;
  for (int i = 0; i < game.n(); ++i) sum.add(exact_lambda(game, i, prior));
  sum.add(-expected_payoff(game, prior));
  sum.add(game.value(FeatureSet::empty(game.n())));
  return sum.value();
}

double verify_expected_shapley(const GameOracle& game) {
  check_capacity(game, Capacity::kExpectedShapley, "verify_expected_shapley");
  const int n = game.n();
  const MatchedPrior prior(n);
  std::vector<KahanSum> expected(n);
  const FeatureSet::Bits end = FeatureSet::Bits{1} << n;
  for (FeatureSet::Bits z = 0; z < end; ++z) {
    const GameOracle carrier_game = game.restricted(FeatureSet(n, z));
    const double p = prior.mass(std::popcount(z));
    for (int i = 0; i < n; ++i) expected[i].add(p * exact_shapley(carrier_game, i));
  }
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst,
                     std::abs(expected[i].value() - exact_lambda(game, i, prior)));
  }
  return worst;
}

double verify_ordering_representation(const GameOracle& game) {
  check_capacity(game, Capacity::kOrderings, "verify_ordering_representation");
  const int n = game.n();
  std::vector<int> tau(n);
  std::iota(tau.begin(), tau.end(), 0);
  std::vector<KahanSum> total(n);
  double orderings = 0.0;
  do {
    FeatureSet prefix = FeatureSet::empty(n);
    double before = game.value(prefix);
    for (int p = 0; p < n; ++p) {
      prefix = prefix.with(tau[p]);
      const double after = game.value(prefix);
      total[tau[p]].add(static_cast<double>(n - p) / (n + 1) * (after - before));
      before = after;
    }
    orderings += 1.0;
  } while (std::next_permutation(tau.begin(), tau.end()));

  const MatchedPrior prior(n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double average = total[i].value() / orderings;
    worst = std::max(worst, std::abs(average - exact_lambda(game, i, prior)));
  }
  return worst;
}

}  // namespace mdselect
