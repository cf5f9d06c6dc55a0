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

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mdselect/errors.hpp"
#include "mdselect/parallel.hpp"
#include "mdselect/rng.hpp"
#include "mdselect/selector.hpp"
#include "mdselect/warnings.hpp"

namespace mdselect::sim {
namespace {

using Json = nlohmann::ordered_json;

// Stream ids below the trial index.
constexpr std::uint64_t kMethodStream = 1;
constexpr std::uint64_t kSplitStream = 2;

double apply_transform(Transform t, double x, const SimConfig& cfg) {
  switch (t) {
    case Transform::kExp: return std::exp(std::clamp(x, -cfg.exp_clip, cfg.exp_clip));
    case Transform::kSquare: return x * x;
    case Transform::kCube: return x * x * x;
    case Transform::kLogAbs: return std::log(std::max(std::abs(x), cfg.log_floor));
  }
  return x;
}

// Upper tail of F(1, df) at f.
double partial_f_pvalue(double f, double df) {
  if (df <= 0.0) return 1.0;
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  const boost::math::fisher_f_distribution<double> dist(1.0, df);
  return boost::math::cdf(boost::math::complement(dist, f));
}

Json to_json(const SimConfig& c) {
  Json j;
  j["n"] = c.n;
  j["true_size"] = c.true_size;
  j["t_obs"] = c.t_obs;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["method"] = std::string(to_string(c.method));
  j["payoff"] = std::string(mdselect::to_string(c.payoff.kind));
  j["split_fraction"] = c.payoff.split_fraction;
  j["split_seed"] = c.payoff.split_seed;
  j["gamma"] = c.gamma;
  j["alpha"] = c.alpha;
  j["coef_low"] = c.coef_low;
  j["coef_high"] = c.coef_high;
  j["noise_r2_target"] = c.noise_r2_target;
  j["exp_clip"] = c.exp_clip;
  j["log_floor"] = c.log_floor;
  j["p_enter"] = c.p_enter;
  j["p_remove"] = c.p_remove;
  return j;
}

std::string method_label(const SimConfig& c) {
  if (c.method == Method::kLambda) {
    return "lambda_" + std::string(mdselect::to_string(c.payoff.kind));
  }
  return std::string(to_string(c.method));
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kLambda: return "lambda";
    case Method::kStepwise: return "stepwise";
    case Method::kAic: return "aic";
    case Method::kBic: return "bic";
    case Method::kOracle: return "oracle";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kLambda, Method::kStepwise, Method::kAic, Method::kBic,
                   Method::kOracle}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected lambda, stepwise, aic, bic or oracle)");
}

std::string_view to_string(Transform transform) {
  switch (transform) {
    case Transform::kExp: return "exp";
    case Transform::kSquare: return "square";
    case Transform::kCube: return "cube";
    case Transform::kLogAbs: return "log_abs";
  }
  return "unknown";
}

void SimConfig::validate() const {
  if (n < 1 || n > FeatureSet::kMaxFeatures) throw ConfigError("n must be in [1, 63]");
  if (true_size < 1 || true_size > n) throw ConfigError("true size must be in [1, n]");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (t_obs < 3) throw ConfigError("t_obs must be at least 3");
  if (!(coef_low > 0.0 && coef_low <= coef_high)) {
    throw ConfigError("coefficient band needs 0 < coef_low <= coef_high");
  }
  if (!(noise_r2_target > 0.0 && noise_r2_target <= 1.0)) {
    throw ConfigError("noise_r2_target must lie in (0, 1]");
  }
  if (!(exp_clip > 0.0) || !(log_floor > 0.0)) {
    throw ConfigError("exp_clip and log_floor must be positive");
  }
  if (!(p_enter > 0.0 && p_enter <= p_remove && p_remove < 1.0)) {
    throw ConfigError("stepwise thresholds need 0 < p_enter <= p_remove < 1");
  }
  payoff.validate();
  OrderingSampleConfig{gamma, seed, alpha}.validate();
}

GeneratedData generate_dataset(const SimConfig& cfg, int trial,
                               Eigen::MatrixXd* pre_mixing) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(trial)});
  std::normal_distribution<double> normal;
  const int rows = cfg.t_obs;
  const int n = cfg.n;

  Eigen::MatrixXd raw(rows, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < n; ++c) raw(r, c) = normal(rng);
  }
  Eigen::MatrixXd mix(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) mix(r, c) = normal(rng);
  }
  if (pre_mixing != nullptr) *pre_mixing = raw;

  Eigen::MatrixXd x = raw * mix;
  const auto transform = static_cast<Transform>(uniform_index(rng, 4));
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < rows; ++r) x(r, c) = apply_transform(transform, x(r, c), cfg);
  }
  for (int c = 0; c < n; ++c) {
    const double mean = x.col(c).mean();
    x.col(c).array() -= mean;
    const double sd = std::sqrt(x.col(c).squaredNorm() / (rows - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw DomainError("generated column " + std::to_string(c) + " is degenerate");
    }
    x.col(c) /= sd;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < cfg.true_size; ++i) {
    const double magnitude = cfg.coef_low + (cfg.coef_high - cfg.coef_low) * uniform_unit(rng);
    beta[i] = (rng() & 1U) != 0 ? magnitude : -magnitude;
  }
  const double intercept = normal(rng);

  const Eigen::VectorXd signal = x * beta;
  const double signal_var =
      (signal.array() - signal.mean()).square().sum() / (rows - 1);
  const double r2 = cfg.noise_r2_target;
  const double noise_sd = std::sqrt(signal_var * (1.0 - r2) / r2);

  Eigen::VectorXd y(rows);
  for (int r = 0; r < rows; ++r) {
    const double eps = normal(rng);
    y[r] = intercept + signal[r] + (noise_sd > 0.0 ? noise_sd * eps : 0.0);
  }

  std::vector<int> truth(cfg.true_size);
  for (int i = 0; i < cfg.true_size; ++i) truth[i] = i;
  return GeneratedData{Dataset(std::move(y), std::move(x)),
                       FeatureSet::from_indices(n, truth), transform, std::move(beta),
                       noise_sd};
}

Discrepancy classify(FeatureSet s_hat, FeatureSet s_true) {
  return Discrepancy{(s_true - s_hat).size(), (s_hat - s_true).size()};
}

void DiscrepancyTally::add(const Discrepancy& d) {
  if (d.exact()) ++exact;
  if (d.under == 1) ++under1;
  if (d.under >= 2) ++under2plus;
  if (d.over == 1) ++over1;
  if (d.over >= 2) ++over2plus;
}

void DiscrepancyTally::merge(const DiscrepancyTally& o) {
  exact += o.exact;
  under1 += o.under1;
  under2plus += o.under2plus;
  over1 += o.over1;
  over2plus += o.over2plus;
  failures += o.failures;
}

FeatureSet stepwise_baseline(const Dataset& data, double p_enter, double p_remove) {
  if (!(p_enter > 0.0 && p_enter <= p_remove && p_remove < 1.0)) {
    throw ConfigError("stepwise thresholds need 0 < p_enter <= p_remove < 1");
  }
  const int n = data.candidates();
  const double obs = data.observations();
  FeatureSet current = FeatureSet::empty(n);
  FitResult cur_fit = ols_fit(data, current);
  std::set<FeatureSet::Bits> visited{current.bits()};

  for (;;) {
    bool changed = false;

    int best = -1;
    double best_p = 1.0;
    for (int i = 0; i < n; ++i) {
      if (current.contains(i)) continue;
      const FitResult fit = ols_fit(data, current.with(i));
      if (fit.k == cur_fit.k) continue;  // linearly dependent
      const double df = obs - fit.k;
      const double f = (cur_fit.rss - fit.rss) / (floored_rss(fit.rss, fit.tss) / df);
      const double p = partial_f_pvalue(f, df);
      if (p < best_p) {
        best_p = p;
        best = i;
      }
    }
    if (best >= 0 && best_p < p_enter && !visited.contains(current.with(best).bits())) {
      current = current.with(best);
      cur_fit = ols_fit(data, current);
      visited.insert(current.bits());
      changed = true;
    }

    int worst = -1;
    double worst_p = 0.0;
    for (int i : current.indices()) {
      const FitResult fit = ols_fit(data, current.without(i));
      const double df = obs - cur_fit.k;
      const double f =
          (fit.rss - cur_fit.rss) / (floored_rss(cur_fit.rss, cur_fit.tss) / df);
      const double p = fit.k == cur_fit.k ? 1.0 : partial_f_pvalue(f, df);
      if (p > worst_p) {
        worst_p = p;
        worst = i;
      }
    }
    if (worst >= 0 && worst_p > p_remove &&
        !visited.contains(current.without(worst).bits())) {
      current = current.without(worst);
      cur_fit = ols_fit(data, current);
      visited.insert(current.bits());
      changed = true;
    }

    if (!changed) break;
  }
  return current;
}

double information_criterion(const FitResult& fit, int observations,
                             InformationCriterion criterion) {
  const double obs = observations;
  const double fit_term = obs * std::log(floored_rss(fit.rss, fit.tss) / obs);
  const double penalty =
      criterion == InformationCriterion::kAic ? 2.0 * fit.k : fit.k * std::log(obs);
  return fit_term + penalty;
}

FeatureSet best_subset_ic(const Dataset& data, InformationCriterion criterion) {
  const int n = data.candidates();
  if (n > 20) {
    throw CapacityError("best subset search is limited to 20 candidates, got " +
                        std::to_string(n));
  }
  if (n > 16) warn("best subset search over 2^" + std::to_string(n) + " subsets");
  const FeatureSet::Bits end = FeatureSet::Bits{1} << n;
  FeatureSet best = FeatureSet::empty(n);
  double best_value = information_criterion(ols_fit(data, best), data.observations(), criterion);
  for (FeatureSet::Bits mask = 1; mask < end; ++mask) {
    const FeatureSet t(n, mask);
    const double value = information_criterion(ols_fit(data, t), data.observations(), criterion);
    // Ascending masks: on equal value and size the earlier (lower) mask stays.
    if (value < best_value || (value == best_value && t.size() < best.size())) {
      best = t;
      best_value = value;
    }
  }
  return best;
}

FeatureSet run_method(const SimConfig& cfg, int trial, const GeneratedData& gen) {
  const auto trial_id = static_cast<std::uint64_t>(trial);
  switch (cfg.method) {
    case Method::kLambda: {
      PayoffSpec spec = cfg.payoff;
      spec.split_seed = derive_seed(cfg.payoff.split_seed, {trial_id, kSplitStream});
      const OrderingSampleConfig sampling{
          cfg.gamma, derive_seed(cfg.seed, {trial_id, kMethodStream}), cfg.alpha};
      return sequential_select(gen.data, spec, sampling).accepted;
    }
    case Method::kStepwise:
      return stepwise_baseline(gen.data, cfg.p_enter, cfg.p_remove);
    case Method::kAic:
      return best_subset_ic(gen.data, InformationCriterion::kAic);
    case Method::kBic:
      return best_subset_ic(gen.data, InformationCriterion::kBic);
    case Method::kOracle:
      return gen.truth;
  }
  throw ConfigError("unhandled method");
}

StudyResult run_study(const SimConfig& cfg, int threads) {
  cfg.validate();
  StudyResult result;
  result.config = cfg;
  result.per_trial.resize(static_cast<std::size_t>(cfg.trials));

  parallel_for(result.per_trial.size(), threads, [&](std::size_t t) {
    TrialRecord& rec = result.per_trial[t];
    rec.trial = static_cast<int>(t);
    try {
      const GeneratedData gen = generate_dataset(cfg, rec.trial);
      rec.s_true = gen.truth;
      rec.s_hat = run_method(cfg, rec.trial, gen);
      rec.discrepancy = classify(rec.s_hat, rec.s_true);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
  });

  for (const TrialRecord& rec : result.per_trial) {
    if (rec.failed) {
      ++result.tally.failures;
    } else {
      result.tally.add(rec.discrepancy);
    }
  }
  return result;
}

std::string to_json(const StudyResult& result) {
  Json j;
  j["config"] = to_json(result.config);
  const DiscrepancyTally& t = result.tally;
  j["tally"] = Json{{"exact", t.exact},         {"under1", t.under1},
                    {"under2plus", t.under2plus}, {"over1", t.over1},
                    {"over2plus", t.over2plus},   {"failures", t.failures}};
  Json trials = Json::array();
  for (const TrialRecord& rec : result.per_trial) {
    Json jt;
    jt["trial"] = rec.trial;
    if (rec.failed) {
      jt["failed"] = true;
      jt["error"] = rec.error;
    } else {
      jt["s_true"] = rec.s_true.indices();
      jt["s_hat"] = rec.s_hat.indices();
      jt["under"] = rec.discrepancy.under;
      jt["over"] = rec.discrepancy.over;
    }
    trials.push_back(std::move(jt));
  }
  j["per_trial"] = std::move(trials);
  return j.dump(2) + "\n";
}

std::string to_csv(const StudyResult& result) {
  const DiscrepancyTally& t = result.tally;
  const int s = result.config.true_size;
  std::ostringstream out;
  out << "true_size,discrepancy," << method_label(result.config) << "\n";
  out << s << ",S_hat=S," << t.exact << "\n";
  out << s << ",|S\\S_hat|=1," << t.under1 << "\n";
  out << s << ",|S\\S_hat|>=2," << t.under2plus << "\n";
  out << s << ",|S_hat\\S|=1," << t.over1 << "\n";
  out << s << ",|S_hat\\S|>=2," << t.over2plus << "\n";
  out << s << ",failures," << t.failures << "\n";
  return out.str();
}

}  // namespace mdselect::sim
