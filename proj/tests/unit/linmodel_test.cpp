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

#include "mdselect/linmodel.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mdselect/errors.hpp"
#include "mdselect/rng.hpp"
#include "test_util.hpp"

namespace mdselect {
namespace {

Eigen::MatrixXd normal_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x6c696eULL});
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

Dataset noisy_linear(int rows, int cols, std::uint64_t seed) {
  const Eigen::MatrixXd x = normal_matrix(rows, cols, seed);
  Eigen::VectorXd y = 0.3 * Eigen::VectorXd::Ones(rows) + 0.5 * normal_matrix(rows, 1, seed + 1);
  for (int c = 0; c < cols; ++c) y += (c + 1.0) * x.col(c);
  return Dataset(y, x);
}

// Independent oracle: solve (A'A) b = A'y by LDLT.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  return (a.transpose() * a).ldlt().solve(a.transpose() * y);
}

class SilenceWarnings : public ::testing::Test {
 protected:
  testing::WarningCapture capture;
  std::vector<std::string>& warnings = capture.messages;
};

using OlsTest = SilenceWarnings;
using PayoffTest = SilenceWarnings;
using CsvTest = SilenceWarnings;

TEST_F(OlsTest, PerfectFitHasZeroResiduals) {
  const Eigen::MatrixXd x = normal_matrix(30, 2, 1);
  const Eigen::VectorXd y = (1.0 + 2.0 * x.col(0).array() - 3.0 * x.col(1).array()).matrix();
  const FitResult fit = ols_fit(Dataset(y, x), FeatureSet::full(2));
  EXPECT_LT(fit.rss, 1e-20);
  EXPECT_NEAR(fit.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(fit.coefficients[1], 2.0, 1e-12);
  EXPECT_NEAR(fit.coefficients[2], -3.0, 1e-12);
  EXPECT_EQ(fit.k, 3);
}

TEST_F(OlsTest, InterceptOnlyGivesTotalSumOfSquares) {
  const Dataset d = noisy_linear(40, 3, 2);
  const FitResult fit = ols_fit(d, FeatureSet::empty(3));
  const double mean = d.y().mean();
  const double tss = (d.y().array() - mean).square().sum();
  EXPECT_NEAR(fit.rss, tss, 1e-10 * tss);
  EXPECT_NEAR(fit.tss, tss, 1e-10 * tss);
  EXPECT_NEAR(fit.coefficients[0], mean, 1e-12);
  EXPECT_EQ(fit.k, 1);
}

TEST_F(OlsTest, AgreesWithNormalEquations) {
  const Dataset d = noisy_linear(50, 3, 3);
  Eigen::MatrixXd a(50, 4);
  a.col(0).setOnes();
  a.rightCols(3) = d.x();
  const Eigen::VectorXd b = normal_equations(a, d.y());
  const FitResult fit = ols_fit(d, FeatureSet::full(3));
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(fit.coefficients[j], b[j], 1e-8);
  const Eigen::VectorXd r = d.y() - a * b;
  EXPECT_NEAR(fit.rss, r.squaredNorm(), 1e-8);
}

TEST_F(OlsTest, ResidualsOrthogonalToDesign) {
  const Dataset d = noisy_linear(60, 4, 4);
  const FeatureSet t = FeatureSet::from_indices(4, std::vector<int>{0, 2});
  const FitResult fit = ols_fit(d, t);
  EXPECT_NEAR(fit.residuals.sum(), 0.0, 1e-10);
  EXPECT_NEAR(fit.residuals.dot(d.x().col(0)), 0.0, 1e-10);
  EXPECT_NEAR(fit.residuals.dot(d.x().col(2)), 0.0, 1e-10);
  EXPECT_NEAR(fit.residuals.squaredNorm(), fit.rss, 1e-10);
}

TEST_F(OlsTest, FixedRegressorsEnterEveryModel) {
  const Eigen::MatrixXd x = normal_matrix(40, 3, 5);
  const Eigen::VectorXd y = x.col(0) + 0.1 * normal_matrix(40, 1, 6).col(0);
  const Dataset with_z = Dataset(y, x).regroup(std::vector<int>{0}, std::vector<int>{1, 2});
  EXPECT_EQ(with_z.fixed(), 1);
  EXPECT_EQ(with_z.candidates(), 2);
  const FitResult a = ols_fit(with_z, FeatureSet::empty(2));
  const FitResult b = ols_fit(Dataset(y, x), FeatureSet::singleton(3, 0));
  EXPECT_NEAR(a.rss, b.rss, 1e-12);
}

TEST_F(OlsTest, RssNeverIncreasesWhenAddingColumns) {
  const Dataset d = noisy_linear(45, 6, 7);
  for (FeatureSet::Bits m = 0; m < 64; ++m) {
    const FeatureSet t(6, m);
    const double rss = ols_fit(d, t).rss;
    for (int i = 0; i < 6; ++i) {
      if (t.contains(i)) continue;
      EXPECT_LE(ols_fit(d, t.with(i)).rss, rss * (1.0 + 1e-12));
    }
  }
}

TEST_F(OlsTest, DuplicateColumnLeavesRssBitIdentical) {
  Eigen::MatrixXd x = normal_matrix(40, 3, 8);
  x.col(2) = x.col(0);
  const Eigen::VectorXd y = x.col(0) - x.col(1) + normal_matrix(40, 1, 9).col(0);
  const Dataset d(y, x);
  const FitResult one = ols_fit(d, FeatureSet::from_indices(3, std::vector<int>{0, 1}));
  const FitResult both = ols_fit(d, FeatureSet::full(3));
  EXPECT_EQ(one.rss, both.rss);
  EXPECT_EQ(both.k, 3);
  EXPECT_EQ(both.columns, 4);
  // Minimum-norm coefficients split the effect across the two copies.
  EXPECT_NEAR(both.coefficients[1], both.coefficients[3], 1e-8);
}

TEST_F(OlsTest, RejectsBadInput) {
  Eigen::MatrixXd x = normal_matrix(10, 2, 1);
  EXPECT_THROW(Dataset(Eigen::VectorXd::Zero(9), x), InputError);
  x(0, 0) = std::nan("");
  EXPECT_THROW(Dataset(Eigen::VectorXd::Zero(10), x), InputError);
  const Dataset d = noisy_linear(20, 2, 1);
  EXPECT_THROW(ols_fit(d, FeatureSet::empty(3)), DomainError);
}

TEST_F(OlsTest, WarnsOnShortSamples) {
  Dataset(Eigen::VectorXd::LinSpaced(5, 0, 1), normal_matrix(5, 4, 1));
  ASSERT_EQ(warnings.size(), 1U);
}

TEST_F(PayoffTest, MatchesClosedForms) {
  const Dataset d = noisy_linear(50, 3, 10);
  const FeatureSet t = FeatureSet::from_indices(3, std::vector<int>{0, 1});
  const FitResult fit = ols_fit(d, t);
  const double n = 50.0;
  const double k = 3.0;
  const double r2 = 1.0 - fit.rss / fit.tss;
  EXPECT_DOUBLE_EQ(payoff(d, {PayoffKind::kR2}, t), r2);
  EXPECT_NEAR(payoff(d, {PayoffKind::kAdjustedR2}, t), 1.0 - (1.0 - r2) * (n - 1) / (n - k),
              1e-14);
  EXPECT_NEAR(payoff(d, {PayoffKind::kF}, t),
              ((fit.tss - fit.rss) / (k - 1)) / (fit.rss / (n - k)), 1e-9);
  EXPECT_NEAR(payoff(d, {PayoffKind::kBic}, t), -(n * std::log(fit.rss / n) + k * std::log(n)),
              1e-10);
  EXPECT_EQ(payoff(d, {PayoffKind::kF}, FeatureSet::empty(3)), 0.0);
  EXPECT_NEAR(payoff(d, {PayoffKind::kR2}, FeatureSet::empty(3)), 0.0, 1e-14);
}

TEST_F(PayoffTest, R2MonotoneAndBicFiniteOnExactFit) {
  const Eigen::MatrixXd x = normal_matrix(30, 2, 11);
  const Eigen::VectorXd y = x.col(0) * 2.0;
  const Dataset d(y, x);
  EXPECT_LE(payoff(d, {PayoffKind::kR2}, FeatureSet::singleton(2, 1)),
            payoff(d, {PayoffKind::kR2}, FeatureSet::full(2)));
  const double bic = payoff(d, {PayoffKind::kBic}, FeatureSet::singleton(2, 0));
  EXPECT_TRUE(std::isfinite(bic));
  const double tss = (y.array() - y.mean()).square().sum();
  EXPECT_NEAR(bic, -(30 * std::log(1e-12 * tss / 30) + 2 * std::log(30.0)), 1e-6);
  EXPECT_TRUE(std::isfinite(payoff(d, {PayoffKind::kF}, FeatureSet::singleton(2, 0))));
}

TEST_F(PayoffTest, DomainErrors) {
  const Dataset constant(Eigen::VectorXd::Ones(20), normal_matrix(20, 2, 1));
  EXPECT_THROW(payoff(constant, {PayoffKind::kR2}, FeatureSet::empty(2)), DomainError);
  EXPECT_THROW(payoff(constant, {PayoffKind::kAdjustedR2}, FeatureSet::empty(2)), DomainError);
  const Dataset tiny(Eigen::VectorXd::LinSpaced(3, 0, 1).array().square().matrix(),
                     normal_matrix(3, 2, 2));
  EXPECT_THROW(payoff(tiny, {PayoffKind::kAdjustedR2}, FeatureSet::full(2)), DomainError);
  EXPECT_THROW(payoff(tiny, {PayoffKind::kF}, FeatureSet::full(2)), DomainError);
  EXPECT_THROW(parse_payoff_kind("aic"), ConfigError);
  EXPECT_EQ(parse_payoff_kind("BIC"), PayoffKind::kBic);
  PayoffSpec bad{PayoffKind::kRmse, 1.0, 0};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST_F(PayoffTest, RmseSplitIsFrozenAndDisjoint) {
  auto d = std::make_shared<const Dataset>(noisy_linear(50, 3, 12));
  const PayoffFunction f(d, {PayoffKind::kRmse, 0.8, 42});
  const PayoffFunction g(d, {PayoffKind::kRmse, 0.8, 42});
  EXPECT_EQ(f.train_rows(), g.train_rows());
  EXPECT_EQ(f.train_rows().size(), 40U);
  EXPECT_EQ(f.test_rows().size(), 10U);
  std::set<int> all(f.train_rows().begin(), f.train_rows().end());
  all.insert(f.test_rows().begin(), f.test_rows().end());
  EXPECT_EQ(all.size(), 50U);
  const FeatureSet t = FeatureSet::singleton(3, 2);
  EXPECT_EQ(f(t), f(t));
  EXPECT_EQ(f(t), g(t));
  EXPECT_LT(f(t), 0.0);
  const PayoffFunction h(d, {PayoffKind::kRmse, 0.8, 43});
  EXPECT_NE(h.test_rows(), f.test_rows());

  // Oracle: fit on training rows by normal equations, score the held-out rows.
  Eigen::MatrixXd a(40, 2);
  Eigen::VectorXd y(40);
  for (int r = 0; r < 40; ++r) {
    a(r, 0) = 1.0;
    a(r, 1) = d->x()(f.train_rows()[r], 2);
    y[r] = d->y()[f.train_rows()[r]];
  }
  const Eigen::VectorXd b = normal_equations(a, y);
  double sse = 0.0;
  for (int row : f.test_rows()) {
    const double e = d->y()[row] - b[0] - b[1] * d->x()(row, 2);
    sse += e * e;
  }
  EXPECT_NEAR(f(t), -std::sqrt(sse / 10.0), 1e-10);
}

TEST_F(CsvTest, ParsesTargetFixedAndCandidates) {
  const LabeledDataset ld = parse_csv_dataset(
      "a,y,fixed:g,b\n1,2,3,4\n5,6,7,8\n9,10,11,13\n", "y");
  EXPECT_EQ(ld.target_name, "y");
  EXPECT_EQ(ld.candidate_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ld.fixed_names, (std::vector<std::string>{"g"}));
  EXPECT_EQ(ld.data.y()[1], 6.0);
  EXPECT_EQ(ld.data.x()(2, 1), 13.0);
  EXPECT_EQ(ld.data.z()(0, 0), 3.0);
}

TEST_F(CsvTest, SkipsNonNumericCandidateColumnsWithWarning) {
  const LabeledDataset ld = parse_csv_dataset("name,y,a\nx,1,2\nz,3,4\nw,5,7\n", "y");
  EXPECT_EQ(ld.candidate_names, (std::vector<std::string>{"a"}));
  EXPECT_FALSE(warnings.empty());
}

TEST_F(CsvTest, Errors) {
  EXPECT_THROW(parse_csv_dataset("a,b\n1,2\n", "y"), ConfigError);
  EXPECT_THROW(parse_csv_dataset("", "y"), InputError);
  EXPECT_THROW(parse_csv_dataset("a,y\n1,2\n3\n", "y"), InputError);
  EXPECT_THROW(parse_csv_dataset("a,y\n1,oops\n3,4\n", "y"), InputError);
  EXPECT_THROW(read_csv_dataset("/nonexistent/file.csv", "y"), InputError);
}

}  // namespace
}  // namespace mdselect
