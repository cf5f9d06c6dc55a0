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

#ifndef MDSELECT_LINMODEL_HPP
#define MDSELECT_LINMODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdselect/feature_set.hpp"

namespace mdselect {

/// Regression data: a dependent variable y, candidate features X (one
/// column per feature) and fixed regressors Z that enter every model. An
/// intercept is always included.
class Dataset {
 public:
  /// Throws InputError on shape mismatch or non-finite entries. Warns when
  /// there are fewer than n + q + 2 observations.
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, Eigen::MatrixXd z = {});

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::MatrixXd& z() const { return z_; }

  int observations() const { return static_cast<int>(y_.size()); }
  int candidates() const { return static_cast<int>(x_.cols()); }
  int fixed() const { return static_cast<int>(z_.cols()); }

  /// Moves the candidate columns `promote` into the fixed block (appended
  /// after the existing Z columns, in the given order) and keeps the
  /// candidate columns `keep` in the given order.
  Dataset regroup(std::span<const int> promote, std::span<const int> keep) const;

  /// Row subset, in the given order.
  Dataset rows(std::span<const int> index) const;

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd z_;
};

struct FitResult {
  /// Intercept, then the X columns of the coalition in ascending order,
  /// then the Z columns.
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  /// Total sum of squares about the mean of y.
  double tss = 0.0;
  /// Number of linearly independent regressors, the degrees of freedom
  /// used by the payoffs.
  int k = 0;
  /// Number of design columns including dependent ones.
  int columns = 0;
};

/// Relative residual norm below which a design column counts as a linear
/// combination of the columns before it.
inline constexpr double kDependenceTolerance = 1e-9;

/// Least squares of y on [1 | Z | X_T] by Householder QR. Columns are
/// examined in that order and a column whose component orthogonal to the
/// previously accepted ones is below kDependenceTolerance of its norm is
/// dropped, so adding an exact copy of an included regressor leaves the
/// residual sum of squares bit-identical. Reported coefficients are the
/// minimum-norm solution when such columns exist.
FitResult ols_fit(const Dataset& data, FeatureSet t);

enum class PayoffKind { kR2, kAdjustedR2, kF, kBic, kRmse };

std::string_view to_string(PayoffKind kind);
/// Accepts r2, ar2, f, bic, rmse (case-insensitive). Throws ConfigError.
PayoffKind parse_payoff_kind(std::string_view name);

struct PayoffSpec {
  PayoffKind kind = PayoffKind::kAdjustedR2;
  double split_fraction = 0.8;
  std::uint64_t split_seed = 0;

  void validate() const;
};

/// The rss used inside logarithms and ratios is floored at this fraction of
/// tss. A model that fits y exactly therefore has a large but finite BIC
/// payoff and F statistic.
inline constexpr double kRssFloorRelative = 1e-12;

double floored_rss(double rss, double tss);

/// A payoff v(T) bound to one dataset. For the RMSE kind the train/test
/// split is drawn once from split_seed at construction and reused for
/// every coalition, so v is a pure function of T.
///
/// Larger is better for every kind; BIC and RMSE are negated.
class PayoffFunction {
 public:
  PayoffFunction(std::shared_ptr<const Dataset> data, PayoffSpec spec);

  double operator()(FeatureSet t) const;

  const PayoffSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }
  /// Estimation and hold-out row indices; empty unless kind is RMSE.
  const std::vector<int>& train_rows() const { return train_rows_; }
  const std::vector<int>& test_rows() const { return test_rows_; }

 private:
  std::shared_ptr<const Dataset> data_;
  PayoffSpec spec_;
  std::vector<int> train_rows_;
  std::vector<int> test_rows_;
  std::shared_ptr<const Dataset> train_;
};

/// One-off payoff evaluation; builds a PayoffFunction per call.
double payoff(const Dataset& data, const PayoffSpec& spec, FeatureSet t);

/// Dataset read from CSV together with its column names.
struct LabeledDataset {
  Dataset data;
  std::string target_name;
  std::vector<std::string> candidate_names;
  std::vector<std::string> fixed_names;
};

/// CSV contract: the first row is a header; `target` names the dependent
/// column; columns whose header starts with "fixed:" become Z (the prefix
/// is stripped from the name); every other column is a candidate, in
/// header order. Throws InputError on malformed rows or non-numeric cells
/// and ConfigError when the target column is missing.
LabeledDataset read_csv_dataset(std::string_view path, std::string_view target);
LabeledDataset parse_csv_dataset(std::string_view text, std::string_view target);

}  // namespace mdselect

#endif  // MDSELECT_LINMODEL_HPP
