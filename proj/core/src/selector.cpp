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

#include "mdselect/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "json.hpp"
#include "mdselect/errors.hpp"

namespace mdselect {
namespace {

using Json = nlohmann::ordered_json;

Json number_or_infinity(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double read_number(const Json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError("unexpected string '" + s + "' where a number was expected");
  }
  return j.get<double>();
}

std::string round_context(int round, const char* what) {
  return "round " + std::to_string(round + 1) + ": " + what;
}

}  // namespace

bool operator==(const FeatureEstimate& a, const FeatureEstimate& b) {
  return a.lambda_hat == b.lambda_hat && a.sigma_hat == b.sigma_hat && a.z == b.z;
}

bool operator==(const ValuationEstimate& a, const ValuationEstimate& b) {
  return a.samples == b.samples && a.features == b.features;
}

bool operator==(const PayoffSpec& a, const PayoffSpec& b) {
  return a.kind == b.kind && a.split_fraction == b.split_fraction &&
         a.split_seed == b.split_seed;
}

bool operator==(const SelectionReport& a, const SelectionReport& b) {
  return a.accepted == b.accepted && a.rounds == b.rounds && a.payoff == b.payoff &&
         a.gamma == b.gamma && a.alpha == b.alpha && a.seed == b.seed &&
         a.payoff_evaluations == b.payoff_evaluations &&
         a.feature_names == b.feature_names;
}

std::uint64_t round_seed(std::uint64_t seed, int round) {
  if (round == 0) return seed;
  return derive_seed(seed, {0x726f756e64ULL, static_cast<std::uint64_t>(round)});
}

SelectionReport sequential_select(const Dataset& data, const PayoffSpec& spec,
                                  const OrderingSampleConfig& cfg, int threads) {
  cfg.validate();
  spec.validate();
  const int n = data.candidates();
  if (n < 1) throw DomainError("selection needs at least one candidate feature");

  SelectionReport report;
  report.accepted = FeatureSet::empty(n);
  report.payoff = spec;
  report.gamma = cfg.gamma;
  report.alpha = cfg.alpha;
  report.seed = cfg.seed;

  const double critical = critical_value(cfg.alpha);
  std::vector<int> remaining(n);
  for (int i = 0; i < n; ++i) remaining[i] = i;
  std::vector<int> accepted_order;

  for (int round = 0; !remaining.empty(); ++round) {
    SelectionRound rec;
    rec.remaining = remaining;
    rec.critical = critical;

    // Accepted features join the fixed block; the game is over the
    // remaining candidates only.
    auto round_data =
        std::make_shared<const Dataset>(data.regroup(accepted_order, remaining));
    const int m = static_cast<int>(remaining.size());
    try {
      PayoffFunction v(round_data, spec);
      GameOracle game(m, [v = std::move(v)](FeatureSet t) { return v(t); });
      OrderingSampleConfig round_cfg = cfg;
      round_cfg.seed = round_seed(cfg.seed, round);
      rec.estimate = estimate(game, round_cfg, threads);
      report.payoff_evaluations += static_cast<std::int64_t>(game.distinct_evaluations());
    } catch (const DomainError& e) {
      throw DomainError(round_context(round, e.what()));
    } catch (const InputError& e) {
      throw InputError(round_context(round, e.what()));
    }

    for (int j = 0; j < m; ++j) {
      if (std::abs(rec.estimate.features[j].z) >= critical) {
        rec.accepted_batch.push_back(remaining[j]);
      }
    }
    const bool done = rec.accepted_batch.empty();
    for (int i : rec.accepted_batch) {
      report.accepted = report.accepted.with(i);
      accepted_order.push_back(i);
      remaining.erase(std::find(remaining.begin(), remaining.end(), i));
    }
    report.rounds.push_back(std::move(rec));
    if (done) break;
  }
  return report;
}

std::string to_json(const SelectionReport& report) {
  const auto& names = report.feature_names;
  auto name_of = [&](int i) -> Json {
    return i < static_cast<int>(names.size()) ? Json(names[i]) : Json(nullptr);
  };

  Json j;
  j["n"] = report.accepted.n();
  j["accepted"] = report.accepted.indices();
  if (!names.empty()) {
    Json accepted_names = Json::array();
    for (int i : report.accepted.indices()) accepted_names.push_back(name_of(i));
    j["accepted_names"] = accepted_names;
  }
  Json rounds = Json::array();
  for (const SelectionRound& r : report.rounds) {
    Json jr;
    jr["remaining"] = r.remaining;
    Json ests = Json::array();
    for (std::size_t k = 0; k < r.remaining.size(); ++k) {
      const FeatureEstimate& f = r.estimate.features[k];
      Json je;
      je["feature"] = r.remaining[k];
      if (!names.empty()) je["name"] = name_of(r.remaining[k]);
      je["lambda"] = f.lambda_hat;
      je["sigma"] = f.sigma_hat;
      je["z"] = number_or_infinity(f.z);
      ests.push_back(std::move(je));
    }
    jr["estimates"] = std::move(ests);
    jr["accepted_batch"] = r.accepted_batch;
    jr["critical"] = r.critical;
    jr["samples"] = r.estimate.samples;
    rounds.push_back(std::move(jr));
  }
  j["rounds"] = std::move(rounds);
  j["payoff"] = std::string(to_string(report.payoff.kind));
  j["split_fraction"] = report.payoff.split_fraction;
  j["split_seed"] = report.payoff.split_seed;
  j["gamma"] = report.gamma;
  j["alpha"] = report.alpha;
  j["seed"] = report.seed;
  j["payoff_evaluations"] = report.payoff_evaluations;
  if (!names.empty()) j["feature_names"] = names;
  return j.dump(2) + "\n";
}

SelectionReport selection_report_from_json(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    SelectionReport report;
    const int n = j.at("n").get<int>();
    report.accepted = FeatureSet::from_indices(n, j.at("accepted").get<std::vector<int>>());
    for (const Json& jr : j.at("rounds")) {
      SelectionRound r;
      r.remaining = jr.at("remaining").get<std::vector<int>>();
      r.accepted_batch = jr.at("accepted_batch").get<std::vector<int>>();
      r.critical = jr.at("critical").get<double>();
      r.estimate.samples = jr.at("samples").get<std::int64_t>();
      for (const Json& je : jr.at("estimates")) {
        r.estimate.features.push_back(FeatureEstimate{je.at("lambda").get<double>(),
                                                      je.at("sigma").get<double>(),
                                                      read_number(je.at("z"))});
      }
      report.rounds.push_back(std::move(r));
    }
    report.payoff.kind = parse_payoff_kind(j.at("payoff").get<std::string>());
    report.payoff.split_fraction = j.at("split_fraction").get<double>();
    report.payoff.split_seed = j.at("split_seed").get<std::uint64_t>();
    report.gamma = j.at("gamma").get<std::int64_t>();
    report.alpha = j.at("alpha").get<double>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.payoff_evaluations = j.at("payoff_evaluations").get<std::int64_t>();
    if (j.contains("feature_names")) {
      report.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed selection report: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(std::string("malformed selection report: ") + e.what());
  }
}

}  // namespace mdselect
