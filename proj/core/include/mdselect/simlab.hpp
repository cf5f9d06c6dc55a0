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

#ifndef MDSELECT_SIMLAB_HPP
#define MDSELECT_SIMLAB_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mdselect/feature_set.hpp"
#include "mdselect/linmodel.hpp"
#include "mdselect/mc_valuation.hpp"

namespace mdselect::sim {

enum class Method {
  kLambda,    // sequential acceptance with the configured payoff
  kStepwise,  // forward/backward partial-F stepwise regression
  kAic,       // exhaustive best subset by AIC
  kBic,       // exhaustive best subset by BIC
  kOracle,    // returns the true set; harness check only
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

enum class Transform { kExp, kSquare, kCube, kLogAbs };

std::string_view to_string(Transform transform);

struct SimConfig {
  int n = 20;
  int true_size = 4;
  int t_obs = 100;
  int trials = 200;
  std::uint64_t seed = 0;
  Method method = Method::kLambda;
  PayoffSpec payoff;
  std::int64_t gamma = 100;
  double alpha = 0.05;
  /// Band for |beta_i| of the true features.
  double coef_low = 0.5;
  double coef_high = 3.0;
  /// Sample R^2 of the noiseless signal against y. 1 means no noise.
  double noise_r2_target = 0.7;
  double exp_clip = 20.0;
  double log_floor = 1e-8;
  double p_enter = 0.05;
  double p_remove = 0.10;

  void validate() const;
};

struct GeneratedData {
  Dataset data;
  FeatureSet truth;
  Transform transform;
  Eigen::VectorXd beta;
  double noise_sd = 0.0;
};

/// Synthetic regression for one trial. Draws standard normal features,
/// mixes them with a random n x n matrix, applies one randomly chosen
/// nonlinear transform, standardizes the columns, and generates y from the
/// first true_size columns plus Gaussian noise scaled to hit
/// noise_r2_target. The stream depends only on (cfg.seed, trial) and the
/// DGP fields of cfg, never on the method. When `pre_mixing` is non-null it
/// receives the raw normal draws.
GeneratedData generate_dataset(const SimConfig& cfg, int trial,
                               Eigen::MatrixXd* pre_mixing = nullptr);

struct Discrepancy {
  int under = 0;  // |S \ S_hat|
  int over = 0;   // |S_hat \ S|
  bool exact() const { return under == 0 && over == 0; }
};

Discrepancy classify(FeatureSet s_hat, FeatureSet s_true);

/// Counts per discrepancy row. A trial can land in one under row and one
/// over row at the same time.
struct DiscrepancyTally {
  std::int64_t exact = 0;
  std::int64_t under1 = 0;
  std::int64_t under2plus = 0;
  std::int64_t over1 = 0;
  std::int64_t over2plus = 0;
  std::int64_t failures = 0;

  void add(const Discrepancy& d);
  void merge(const DiscrepancyTally& other);
  friend bool operator==(const DiscrepancyTally&, const DiscrepancyTally&) = default;
};

/// Forward/backward stepwise regression on partial-F p-values. Requires
/// 0 < p_enter <= p_remove < 1.
FeatureSet stepwise_baseline(const Dataset& data, double p_enter, double p_remove);

enum class InformationCriterion { kAic, kBic };

/// T ln(rss/T) + penalty, with rss floored by floored_rss.
double information_criterion(const FitResult& fit, int observations,
                             InformationCriterion criterion);

/// Exhaustive search over all 2^n subsets for the minimum criterion. Ties
/// go to the smaller subset, then the lower bitmask. Requires n <= 20.
FeatureSet best_subset_ic(const Dataset& data, InformationCriterion criterion);

/// Applies cfg.method to one generated dataset.
FeatureSet run_method(const SimConfig& cfg, int trial, const GeneratedData& gen);

struct TrialRecord {
  int trial = 0;
  FeatureSet s_true;
  FeatureSet s_hat;
  Discrepancy discrepancy;
  bool failed = false;
  std::string error;
};

struct StudyResult {
  SimConfig config;
  DiscrepancyTally tally;
  std::vector<TrialRecord> per_trial;
};

/// Runs every trial (in parallel when threads > 1) and tallies the
/// outcomes. A trial that throws is recorded as a failure.
StudyResult run_study(const SimConfig& cfg, int threads = 1);

std::string to_json(const StudyResult& result);
/// Table layout: one row per discrepancy category plus a failures row.
std::string to_csv(const StudyResult& result);

}  // namespace mdselect::sim

#endif  // MDSELECT_SIMLAB_HPP
