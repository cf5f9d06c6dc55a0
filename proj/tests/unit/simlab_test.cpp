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

#include "mdselect/simlab.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mdselect/errors.hpp"
#include "mdselect/rng.hpp"
#include "test_util.hpp"

namespace mdselect::sim {
namespace {

SimConfig small_config(Method method) {
  SimConfig cfg;
  cfg.n = 8;
  cfg.true_size = 3;
  cfg.t_obs = 80;
  cfg.trials = 12;
  cfg.seed = 5;
  cfg.method = method;
  return cfg;
}

double mean_abs_offdiag_correlation(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  double total = 0.0;
  int count = 0;
  for (int i = 0; i < m.cols(); ++i) {
    for (int j = i + 1; j < m.cols(); ++j) {
      total += std::abs(cov(i, j) / (sd[i] * sd[j]));
      ++count;
    }
  }
  return total / count;
}

// Independent best-subset search: rss from the normal equations of every
// design, criterion written out directly.
FeatureSet brute_force_subset(const Dataset& d, bool bic) {
  const int n = d.candidates();
  const int rows = d.observations();
  const double tss = (d.y().array() - d.y().mean()).square().sum();
  FeatureSet best = FeatureSet::empty(n);
  double best_value = std::numeric_limits<double>::infinity();
  for (FeatureSet::Bits mask = 0; mask < (FeatureSet::Bits{1} << n); ++mask) {
    const FeatureSet t(n, mask);
    const std::vector<int> idx = t.indices();
    Eigen::MatrixXd a(rows, 1 + idx.size());
    a.col(0).setOnes();
    for (std::size_t j = 0; j < idx.size(); ++j) a.col(1 + j) = d.x().col(idx[j]);
    const Eigen::VectorXd b = (a.transpose() * a).ldlt().solve(a.transpose() * d.y());
    const double rss = std::max((d.y() - a * b).squaredNorm(), 1e-12 * tss);
    const double k = static_cast<double>(a.cols());
    const double value =
        rows * std::log(rss / rows) + (bic ? k * std::log(static_cast<double>(rows)) : 2.0 * k);
    if (value < best_value) {
      best_value = value;
      best = t;
    }
  }
  return best;
}

TEST(GenerateTest, DeterministicPerSeedAndTrial) {
  const SimConfig cfg = small_config(Method::kLambda);
  const GeneratedData a = generate_dataset(cfg, 3);
  const GeneratedData b = generate_dataset(cfg, 3);
  const GeneratedData c = generate_dataset(cfg, 4);
  EXPECT_EQ(a.data.x(), b.data.x());
  EXPECT_EQ(a.data.y(), b.data.y());
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_NE(a.data.y(), c.data.y());
  // The method never touches the data-generating stream.
  const GeneratedData d = generate_dataset(small_config(Method::kStepwise), 3);
  EXPECT_EQ(a.data.y(), d.data.y());
}

TEST(GenerateTest, ShapeTruthAndStandardization) {
  const SimConfig cfg = small_config(Method::kLambda);
  for (int trial = 0; trial < 8; ++trial) {
    const GeneratedData g = generate_dataset(cfg, trial);
    EXPECT_EQ(g.data.observations(), 80);
    EXPECT_EQ(g.data.candidates(), 8);
    EXPECT_EQ(g.data.fixed(), 0);
    EXPECT_EQ(g.truth, FeatureSet::from_indices(8, std::vector<int>{0, 1, 2}));
    for (int c = 0; c < 8; ++c) {
      const Eigen::VectorXd col = g.data.x().col(c);
      EXPECT_NEAR(col.mean(), 0.0, 1e-12);
      EXPECT_NEAR((col.array() - col.mean()).square().sum() / 79.0, 1.0, 1e-12);
    }
    for (int c = 0; c < 3; ++c) {
      EXPECT_GE(std::abs(g.beta[c]), cfg.coef_low);
      EXPECT_LE(std::abs(g.beta[c]), cfg.coef_high);
    }
    EXPECT_GT(g.noise_sd, 0.0);
  }
}

TEST(GenerateTest, MixingRaisesCorrelation) {
  const SimConfig cfg = small_config(Method::kLambda);
  double raw_total = 0.0;
  double mixed_total = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd raw;
    const GeneratedData g = generate_dataset(cfg, trial, &raw);
    ASSERT_EQ(raw.rows(), 80);
    raw_total += mean_abs_offdiag_correlation(raw);
    mixed_total += mean_abs_offdiag_correlation(g.data.x());
  }
  EXPECT_GT(mixed_total, 1.5 * raw_total);
}

TEST(GenerateTest, NoiselessDataFitsExactly) {
  SimConfig cfg = small_config(Method::kLambda);
  cfg.noise_r2_target = 1.0;
  for (int trial = 0; trial < 5; ++trial) {
    const GeneratedData g = generate_dataset(cfg, trial);
    EXPECT_EQ(g.noise_sd, 0.0);
    EXPECT_NEAR(payoff(g.data, {PayoffKind::kR2}, g.truth), 1.0, 1e-12);
  }
}

TEST(GenerateTest, NoiseHitsTargetOnAverage) {
  SimConfig cfg = small_config(Method::kLambda);
  cfg.t_obs = 400;
  double total = 0.0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    const GeneratedData g = generate_dataset(cfg, trial);
    total += payoff(g.data, {PayoffKind::kR2}, g.truth);
  }
  EXPECT_NEAR(total / trials, cfg.noise_r2_target, 0.03);
}

TEST(GenerateTest, RejectsBadConfig) {
  SimConfig cfg = small_config(Method::kLambda);
  cfg.true_size = 9;
  EXPECT_THROW(generate_dataset(cfg, 0), ConfigError);
  cfg = small_config(Method::kLambda);
  cfg.noise_r2_target = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config(Method::kLambda);
  cfg.p_enter = 0.2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_method("lasso"), ConfigError);
  EXPECT_EQ(parse_method("bic"), Method::kBic);
}

TEST(ClassifyTest, Examples) {
  const FeatureSet s = FeatureSet::from_indices(6, std::vector<int>{0, 1, 2});
  EXPECT_TRUE(classify(s, s).exact());
  const Discrepancy d1 = classify(FeatureSet::from_indices(6, std::vector<int>{0, 1}), s);
  EXPECT_EQ(d1.under, 1);
  EXPECT_EQ(d1.over, 0);
  const Discrepancy d2 =
      classify(FeatureSet::from_indices(6, std::vector<int>{0, 3, 4, 5}), s);
  EXPECT_EQ(d2.under, 2);
  EXPECT_EQ(d2.over, 3);
  const Discrepancy d3 = classify(FeatureSet::empty(6), s);
  EXPECT_EQ(d3.under, 3);
  EXPECT_EQ(d3.over, 0);
}

TEST(ClassifyTest, TallyCountsEveryTrialOnce) {
  DiscrepancyTally a;
  a.add({0, 0});
  a.add({1, 0});
  a.add({2, 1});
  a.add({0, 4});
  EXPECT_EQ(a.exact, 1);
  EXPECT_EQ(a.under1, 1);
  EXPECT_EQ(a.under2plus, 1);
  EXPECT_EQ(a.over1, 1);
  EXPECT_EQ(a.over2plus, 1);
  DiscrepancyTally b;
  b.add({0, 0});
  b.failures = 2;
  a.merge(b);
  EXPECT_EQ(a.exact, 2);
  EXPECT_EQ(a.failures, 2);
}

TEST(StepwiseTest, FindsStrongIndependentSignals) {
  Rng rng = make_rng(3, {});
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(120, 6);
  Eigen::VectorXd y(120);
  for (int r = 0; r < 120; ++r) {
    for (int c = 0; c < 6; ++c) x(r, c) = normal(rng);
    y[r] = 3.0 * x(r, 1) - 2.0 * x(r, 4) + 0.5 * normal(rng);
  }
  const FeatureSet s = stepwise_baseline(Dataset(y, x), 0.05, 0.10);
  EXPECT_TRUE(s.contains(1));
  EXPECT_TRUE(s.contains(4));
  EXPECT_LE(s.size(), 3);
  EXPECT_THROW(stepwise_baseline(Dataset(y, x), 0.2, 0.1), ConfigError);
}

TEST(StepwiseTest, EntryThresholdMatchesPartialFTest) {
  // With one candidate, stepwise enters it iff the F(1, T-2) upper tail of
  // its partial F statistic is below p_enter.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng = make_rng(seed, {0x7370ULL});
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(40, 1);
    Eigen::VectorXd y(40);
    for (int r = 0; r < 40; ++r) {
      x(r, 0) = normal(rng);
      y[r] = 0.3 * x(r, 0) + normal(rng);
    }
    const Dataset d(y, x);
    const double rss0 = ols_fit(d, FeatureSet::empty(1)).rss;
    const double rss1 = ols_fit(d, FeatureSet::full(1)).rss;
    const double f = (rss0 - rss1) / (rss1 / 38.0);
    const double p = boost::math::cdf(
        boost::math::complement(boost::math::fisher_f_distribution<double>(1.0, 38.0), f));
    EXPECT_EQ(stepwise_baseline(d, 0.05, 0.10).contains(0), p < 0.05) << seed;
  }
}

TEST(BestSubsetTest, MatchesBruteForceOracle) {
  SimConfig cfg = small_config(Method::kBic);
  cfg.n = 10;
  cfg.t_obs = 60;
  for (int trial = 0; trial < 4; ++trial) {
    const GeneratedData g = generate_dataset(cfg, trial);
    EXPECT_EQ(best_subset_ic(g.data, InformationCriterion::kBic), brute_force_subset(g.data, true));
    EXPECT_EQ(best_subset_ic(g.data, InformationCriterion::kAic),
              brute_force_subset(g.data, false));
  }
}

TEST(BestSubsetTest, NoiselessBicRecoversTruth) {
  SimConfig cfg = small_config(Method::kBic);
  cfg.n = 10;
  cfg.noise_r2_target = 1.0;
  for (int trial = 0; trial < 5; ++trial) {
    const GeneratedData g = generate_dataset(cfg, trial);
    EXPECT_EQ(best_subset_ic(g.data, InformationCriterion::kBic), g.truth);
  }
}

TEST(BestSubsetTest, CapacityLimit) {
  const Dataset d(Eigen::VectorXd::LinSpaced(30, 0, 1), Eigen::MatrixXd::Random(30, 21));
  EXPECT_THROW(best_subset_ic(d, InformationCriterion::kBic), CapacityError);
}

TEST(StudyTest, OracleMethodIsAlwaysExact) {
  const StudyResult r = run_study(small_config(Method::kOracle));
  EXPECT_EQ(r.tally.exact, 12);
  EXPECT_EQ(r.tally.failures, 0);
  EXPECT_EQ(r.tally.under1 + r.tally.under2plus + r.tally.over1 + r.tally.over2plus, 0);
}

TEST(StudyTest, ThreadInvariantAndSerializable) {
  SimConfig cfg = small_config(Method::kLambda);
  cfg.trials = 6;
  const StudyResult a = run_study(cfg, 1);
  const StudyResult b = run_study(cfg, 4);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(to_csv(a), to_csv(b));
  EXPECT_EQ(a.tally, b.tally);
  std::istringstream csv(to_csv(a));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 7U);
  EXPECT_EQ(lines[0], "true_size,discrepancy,lambda_ar2");
  EXPECT_EQ(lines[1].rfind("3,S_hat=S,", 0), 0U);
  EXPECT_EQ(lines[6].rfind("3,failures,", 0), 0U);
}

TEST(StudyTest, TallyMatchesPerTrialRecords) {
  SimConfig cfg = small_config(Method::kStepwise);
  const StudyResult r = run_study(cfg);
  DiscrepancyTally recount;
  for (const TrialRecord& rec : r.per_trial) {
    ASSERT_FALSE(rec.failed) << rec.error;
    EXPECT_EQ(rec.s_true, FeatureSet::from_indices(8, std::vector<int>{0, 1, 2}));
    const Discrepancy d = classify(rec.s_hat, rec.s_true);
    EXPECT_EQ(d.under, rec.discrepancy.under);
    EXPECT_EQ(d.over, rec.discrepancy.over);
    recount.add(d);
  }
  EXPECT_EQ(recount, r.tally);
}

TEST(StudyTest, FailingTrialsAreCounted) {
  SimConfig cfg = small_config(Method::kLambda);
  cfg.trials = 3;
  cfg.t_obs = 3;  // AR2 needs more observations than regressors
  testing::WarningCapture quiet;
  const StudyResult r = run_study(cfg);
  EXPECT_EQ(r.tally.failures, 3);
  EXPECT_TRUE(r.per_trial[0].failed);
  EXPECT_FALSE(r.per_trial[0].error.empty());
}

}  // namespace
}  // namespace mdselect::sim
