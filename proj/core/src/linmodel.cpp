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

#include <Eigen/QR>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "mdselect/errors.hpp"
#include "mdselect/rng.hpp"
#include "mdselect/warnings.hpp"

namespace mdselect {
namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + " contains non-finite entries");
  }
}

using Column = std::vector<double>;

// Design columns in solve order [1 | Z | X_T].
std::vector<Column> design_columns(const Dataset& data, FeatureSet t) {
  const int rows = data.observations();
  std::vector<Column> cols;
  cols.reserve(1 + data.fixed() + t.size());
  cols.emplace_back(rows, 1.0);
  auto push = [&](const Eigen::MatrixXd& m, int c) {
    Column col(rows);
    for (int r = 0; r < rows; ++r) col[r] = m(r, c);
    cols.push_back(std::move(col));
  };
  for (int c = 0; c < data.fixed(); ++c) push(data.z(), c);
  for (int i : t.indices()) push(data.x(), i);
  return cols;
}

struct QrSolution {
  double rss = 0.0;
  int rank = 0;
  // Basic solution in solve order; zero for dropped columns.
  std::vector<double> coef;
  std::vector<bool> dropped;
};

// Householder QR that accepts columns left to right and drops any column
// lying (to tolerance) in the span of the accepted ones. Dropped columns
// never produce a reflector, so the arithmetic on the remaining columns is
// identical to the fit without them. Plain scalar loops keep the rounding
// independent of memory alignment.
QrSolution solve_least_squares(std::vector<Column> a, Column b, bool want_coef) {
  const std::size_t m = b.size();
  const std::size_t p = a.size();
  QrSolution out;
  out.dropped.assign(p, true);
  std::vector<std::size_t> kept;
  kept.reserve(p);

  std::size_t r = 0;
  Column v;
  for (std::size_t j = 0; j < p; ++j) {
    Column& col = a[j];
    double orig = 0.0;
    // Column j has already been transformed by the first r reflectors;
    // orthogonal transforms preserve its norm.
    for (std::size_t i = 0; i < m; ++i) orig += col[i] * col[i];
    orig = std::sqrt(orig);
    double tail = 0.0;
    for (std::size_t i = r; i < m; ++i) tail += col[i] * col[i];
    tail = std::sqrt(tail);
    if (r >= m || orig == 0.0 || tail <= kDependenceTolerance * orig) continue;

    const double alpha = col[r] >= 0.0 ? -tail : tail;
    v.assign(col.begin() + static_cast<std::ptrdiff_t>(r), col.end());
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double e : v) vnorm2 += e * e;
    auto reflect = [&](Column& target) {
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * target[r + i];
      const double f = 2.0 * s / vnorm2;
      for (std::size_t i = 0; i < v.size(); ++i) target[r + i] -= f * v[i];
    };
    for (std::size_t jj = j + 1; jj < p; ++jj) reflect(a[jj]);
    reflect(b);
    col[r] = alpha;
    for (std::size_t i = r + 1; i < m; ++i) col[i] = 0.0;
    out.dropped[j] = false;
    kept.push_back(j);
    ++r;
  }

  out.rank = static_cast<int>(r);
  double rss = 0.0;
  for (std::size_t i = r; i < m; ++i) rss += b[i] * b[i];
  out.rss = rss;

  if (want_coef) {
    out.coef.assign(p, 0.0);
    for (std::size_t c = r; c-- > 0;) {
      double s = b[c];
      for (std::size_t c2 = c + 1; c2 < r; ++c2) s -= a[kept[c2]][c] * out.coef[kept[c2]];
      out.coef[kept[c]] = s / a[kept[c]][c];
    }
  }
  return out;
}

double total_sum_of_squares(const Eigen::VectorXd& y) {
  double mean = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) mean += y[i];
  mean /= static_cast<double>(y.size());
  double tss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) tss += (y[i] - mean) * (y[i] - mean);
  return tss;
}

Column to_column(const Eigen::VectorXd& y) { return Column(y.data(), y.data() + y.size()); }

// Maps solve order [1 | Z | X_T] to report order [1 | X_T | Z].
std::vector<int> report_positions(int fixed, int selected) {
  std::vector<int> pos(1 + fixed + selected);
  pos[0] = 0;
  for (int c = 0; c < fixed; ++c) pos[1 + c] = 1 + selected + c;
  for (int s = 0; s < selected; ++s) pos[1 + fixed + s] = 1 + s;
  return pos;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, Eigen::MatrixXd z)
    : y_(std::move(y)), x_(std::move(x)), z_(std::move(z)) {
  const Eigen::Index rows = y_.size();
  if (rows == 0) throw InputError("dataset has no observations");
  if (x_.size() == 0) x_.resize(rows, x_.cols());
  if (z_.size() == 0) z_.resize(rows, z_.cols());
  if (x_.rows() != rows || z_.rows() != rows) {
    throw InputError("dataset blocks have mismatched row counts");
  }
  if (x_.cols() > FeatureSet::kMaxFeatures) {
    throw InputError("at most 63 candidate features are supported, got " +
                     std::to_string(x_.cols()));
  }
  check_finite(y_, "y");
  check_finite(x_, "candidate block X");
  check_finite(z_, "fixed block Z");
  if (rows < x_.cols() + z_.cols() + 2) {
    warn("dataset has " + std::to_string(rows) + " observations for " +
         std::to_string(x_.cols()) + " candidates and " +
         std::to_string(z_.cols()) +
         " fixed regressors; some payoffs may be undefined");
  }
}

Dataset Dataset::regroup(std::span<const int> promote, std::span<const int> keep) const {
  const Eigen::Index rows = y_.size();
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd z(rows, z_.cols() + static_cast<Eigen::Index>(promote.size()));
  z.leftCols(z_.cols()) = z_;
  for (std::size_t c = 0; c < promote.size(); ++c) {
    z.col(z_.cols() + static_cast<Eigen::Index>(c)) = x_.col(promote[c]);
  }
  for (std::size_t c = 0; c < keep.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = x_.col(keep[c]);
  }
  return Dataset(y_, std::move(x), std::move(z));
}

Dataset Dataset::rows(std::span<const int> index) const {
  const auto count = static_cast<Eigen::Index>(index.size());
  Eigen::VectorXd y(count);
  Eigen::MatrixXd x(count, x_.cols());
  Eigen::MatrixXd z(count, z_.cols());
  for (Eigen::Index r = 0; r < count; ++r) {
    y[r] = y_[index[r]];
    x.row(r) = x_.row(index[r]);
    z.row(r) = z_.row(index[r]);
  }
  return Dataset(std::move(y), std::move(x), std::move(z));
}

FitResult ols_fit(const Dataset& data, FeatureSet t) {
  if (t.n() != data.candidates()) {
    throw DomainError("coalition over n = " + std::to_string(t.n()) +
                      " for a dataset with " + std::to_string(data.candidates()) +
                      " candidates");
  }
  std::vector<Column> cols = design_columns(data, t);
  const int p = static_cast<int>(cols.size());
  const int rows = data.observations();
  QrSolution qr = solve_least_squares(cols, to_column(data.y()), true);

  FitResult fit;
  fit.rss = qr.rss;
  fit.tss = total_sum_of_squares(data.y());
  fit.k = qr.rank;
  fit.columns = p;

  fit.residuals = data.y();
  for (int j = 0; j < p; ++j) {
    if (qr.coef[j] == 0.0) continue;
    for (int r = 0; r < rows; ++r) fit.residuals[r] -= qr.coef[j] * cols[j][r];
  }

  Eigen::VectorXd solve_order(p);
  if (qr.rank < p) {
    Eigen::MatrixXd design(rows, p);
    for (int j = 0; j < p; ++j) {
      for (int r = 0; r < rows; ++r) design(r, j) = cols[j][r];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    solve_order = cod.solve(data.y());
  } else {
    for (int j = 0; j < p; ++j) solve_order[j] = qr.coef[j];
  }
  const std::vector<int> pos = report_positions(data.fixed(), t.size());
  fit.coefficients.resize(p);
  for (int j = 0; j < p; ++j) fit.coefficients[pos[j]] = solve_order[j];
  return fit;
}

std::string_view to_string(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::kR2: return "r2";
    case PayoffKind::kAdjustedR2: return "ar2";
    case PayoffKind::kF: return "f";
    case PayoffKind::kBic: return "bic";
    case PayoffKind::kRmse: return "rmse";
  }
  return "unknown";
}

PayoffKind parse_payoff_kind(std::string_view name) {
  const std::string key = lower(name);
  if (key == "r2") return PayoffKind::kR2;
  if (key == "ar2") return PayoffKind::kAdjustedR2;
  if (key == "f") return PayoffKind::kF;
  if (key == "bic") return PayoffKind::kBic;
  if (key == "rmse" || key == "rm") return PayoffKind::kRmse;
  throw ConfigError("unknown payoff '" + std::string(name) +
                    "' (expected r2, ar2, f, bic or rmse)");
}

void PayoffSpec::validate() const {
  if (kind == PayoffKind::kRmse && !(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ConfigError("rmse payoff needs a split fraction strictly between 0 and 1");
  }
}

double floored_rss(double rss, double tss) {
  const double floor =
      tss > 0.0 ? kRssFloorRelative * tss : std::numeric_limits<double>::min();
  return std::max(rss, floor);
}

PayoffFunction::PayoffFunction(std::shared_ptr<const Dataset> data, PayoffSpec spec)
    : data_(std::move(data)), spec_(spec) {
  if (!data_) throw DomainError("payoff needs a dataset");
  spec_.validate();
  if (spec_.kind != PayoffKind::kRmse) return;

  const int rows = data_->observations();
  const int n_train = std::clamp(
      static_cast<int>(std::floor(spec_.split_fraction * rows)), 1, rows - 1);
  if (rows < 2) throw DomainError("rmse payoff needs at least 2 observations");
  std::vector<int> perm(rows);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(spec_.split_seed, {});
  for (int i = rows - 1; i > 0; --i) {
    std::swap(perm[i], perm[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
  }
  train_rows_.assign(perm.begin(), perm.begin() + n_train);
  test_rows_.assign(perm.begin() + n_train, perm.end());
  std::sort(train_rows_.begin(), train_rows_.end());
  std::sort(test_rows_.begin(), test_rows_.end());
  train_ = std::make_shared<const Dataset>(data_->rows(train_rows_));
}

double PayoffFunction::operator()(FeatureSet t) const {
  if (t.n() != data_->candidates()) {
    throw DomainError("coalition size does not match the dataset");
  }
  if (spec_.kind == PayoffKind::kRmse) {
    const Dataset& train = *train_;
    QrSolution qr =
        solve_least_squares(design_columns(train, t), to_column(train.y()), true);
    const std::vector<int> sel = t.indices();
    const Dataset& full = *data_;
    double sse = 0.0;
    for (int row : test_rows_) {
      double pred = qr.coef[0];
      for (int c = 0; c < full.fixed(); ++c) pred += qr.coef[1 + c] * full.z()(row, c);
      for (std::size_t s = 0; s < sel.size(); ++s) {
        pred += qr.coef[1 + full.fixed() + s] * full.x()(row, sel[s]);
      }
      const double e = full.y()[row] - pred;
      sse += e * e;
    }
    return -std::sqrt(sse / static_cast<double>(test_rows_.size()));
  }

  const Dataset& data = *data_;
  const QrSolution qr =
      solve_least_squares(design_columns(data, t), to_column(data.y()), false);
  const double tss = total_sum_of_squares(data.y());
  const double obs = data.observations();
  const double k = qr.rank;

  switch (spec_.kind) {
    case PayoffKind::kR2:
      if (tss == 0.0) throw DomainError("r2 payoff undefined for constant y");
      return 1.0 - qr.rss / tss;
    case PayoffKind::kAdjustedR2: {
      if (tss == 0.0) throw DomainError("ar2 payoff undefined for constant y");
      if (obs <= k) {
        throw DomainError("ar2 payoff undefined: " + std::to_string(qr.rank) +
                          " coefficients for " + std::to_string(data.observations()) +
                          " observations");
      }
      const double r2 = 1.0 - qr.rss / tss;
      return 1.0 - (1.0 - r2) * (obs - 1.0) / (obs - k);
    }
    case PayoffKind::kF: {
      if (qr.rank == 1) return 0.0;
      if (tss == 0.0) throw DomainError("f payoff undefined for constant y");
      if (obs <= k) {
        throw DomainError("f payoff undefined: " + std::to_string(qr.rank) +
                          " coefficients for " + std::to_string(data.observations()) +
                          " observations");
      }
      return ((tss - qr.rss) / (k - 1.0)) / (floored_rss(qr.rss, tss) / (obs - k));
    }
    case PayoffKind::kBic:
      return -(obs * std::log(floored_rss(qr.rss, tss) / obs) + k * std::log(obs));
    case PayoffKind::kRmse:
      break;
  }
  throw DomainError("unhandled payoff kind");
}

double payoff(const Dataset& data, const PayoffSpec& spec, FeatureSet t) {
  return PayoffFunction(std::make_shared<const Dataset>(data), spec)(t);
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(std::string_view line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(trim(cur));
  return fields;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size();
}

}  // namespace

LabeledDataset parse_csv_dataset(std::string_view text, std::string_view target) {
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!trim(line).empty()) {
      rows.push_back(split_csv_line(line, line_no));
      line_numbers.push_back(line_no);
    }
    start = end + 1;
  }
  if (rows.empty()) throw InputError("csv input is empty");
  const std::vector<std::string>& header = rows.front();
  const std::size_t width = header.size();
  if (rows.size() < 2) throw InputError("csv input has a header but no data rows");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw InputError("line " + std::to_string(line_numbers[r]) + ": expected " +
                       std::to_string(width) + " fields, found " +
                       std::to_string(rows[r].size()));
    }
  }

  const auto target_it = std::find(header.begin(), header.end(), target);
  if (target_it == header.end()) {
    throw ConfigError("target column '" + std::string(target) + "' not found in csv header");
  }
  const auto target_col = static_cast<std::size_t>(target_it - header.begin());

  const std::size_t n_obs = rows.size() - 1;
  auto numeric_column = [&](std::size_t c, bool required) -> std::optional<Eigen::VectorXd> {
    Eigen::VectorXd col(static_cast<Eigen::Index>(n_obs));
    for (std::size_t r = 0; r < n_obs; ++r) {
      double v = 0.0;
      if (!parse_number(rows[r + 1][c], v)) {
        if (!required) return std::nullopt;
        throw InputError("line " + std::to_string(line_numbers[r + 1]) + ", column '" +
                         header[c] + "': '" + rows[r + 1][c] + "' is not a number");
      }
      if (!std::isfinite(v)) {
        throw InputError("line " + std::to_string(line_numbers[r + 1]) + ", column '" +
                         header[c] + "': non-finite value");
      }
      col[static_cast<Eigen::Index>(r)] = v;
    }
    return col;
  };

  static constexpr std::string_view kFixedPrefix = "fixed:";
  std::vector<Eigen::VectorXd> cand_cols, fixed_cols;
  std::vector<std::string> candidate_names, fixed_names;
  Eigen::VectorXd y = *numeric_column(target_col, true);
  for (std::size_t c = 0; c < width; ++c) {
    if (c == target_col) continue;
    const std::string& name = header[c];
    if (name.starts_with(kFixedPrefix)) {
      fixed_cols.push_back(*numeric_column(c, true));
      fixed_names.push_back(name.substr(kFixedPrefix.size()));
    } else if (auto col = numeric_column(c, false)) {
      cand_cols.push_back(std::move(*col));
      candidate_names.push_back(name);
    } else {
      warn("skipping non-numeric column '" + name + "'");
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_obs), static_cast<Eigen::Index>(cand_cols.size()));
  for (std::size_t c = 0; c < cand_cols.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = cand_cols[c];
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n_obs), static_cast<Eigen::Index>(fixed_cols.size()));
  for (std::size_t c = 0; c < fixed_cols.size(); ++c) z.col(static_cast<Eigen::Index>(c)) = fixed_cols[c];
  return LabeledDataset{Dataset(std::move(y), std::move(x), std::move(z)),
                        std::string(target), std::move(candidate_names),
                        std::move(fixed_names)};
}

LabeledDataset read_csv_dataset(std::string_view path, std::string_view target) {
  std::ifstream in{std::string(path), std::ios::binary};
  if (!in) throw InputError("cannot open '" + std::string(path) + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_dataset(buf.str(), target);
}

}  // namespace mdselect
