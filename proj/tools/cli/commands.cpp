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

#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdselect/errors.hpp"
#include "mdselect/game.hpp"
#include "mdselect/linmodel.hpp"
#include "mdselect/rng.hpp"
#include "mdselect/selector.hpp"

namespace mdselect::cli {
namespace {

using Json = nlohmann::ordered_json;

std::string format(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string sibling_csv(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + ".csv";
  }
  return path.substr(0, dot) + ".csv";
}

std::string feature_label(const SelectionReport& r, int i) {
  if (i < static_cast<int>(r.feature_names.size())) return r.feature_names[i];
  return "x" + std::to_string(i);
}

std::string selection_csv(const SelectionReport& report) {
  std::ostringstream out;
  out << "round,feature,name,lambda,sigma,z,accepted\n";
  for (std::size_t r = 0; r < report.rounds.size(); ++r) {
    const SelectionRound& round = report.rounds[r];
    for (std::size_t k = 0; k < round.remaining.size(); ++k) {
      const int i = round.remaining[k];
      const FeatureEstimate& f = round.estimate.features[k];
      const bool accepted = std::find(round.accepted_batch.begin(),
                                      round.accepted_batch.end(),
                                      i) != round.accepted_batch.end();
      out << r + 1 << ',' << i << ',' << feature_label(report, i) << ','
          << format("%.17g", f.lambda_hat) << ',' << format("%.17g", f.sigma_hat) << ','
          << format("%.17g", f.z) << ',' << (accepted ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

// Uniform[0, 1) payoffs indexed by bitmask, one stream per (n, game).
std::vector<double> random_game_table(std::uint64_t seed, int n, int game) {
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(game)});
  std::vector<double> table(std::size_t{1} << n);
  for (double& v : table) v = uniform_unit(rng);
  return table;
}

GameOracle table_game(int n, std::vector<double> table) {
  auto values = std::make_shared<const std::vector<double>>(std::move(table));
  return GameOracle(n, [values](FeatureSet t) { return (*values)[t.bits()]; });
}

struct VerifyRow {
  std::string check;
  int n;
  int games;
  double residual;
};

}  // namespace

int cmd_select(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ConfigError("select needs --input");
  if (cfg.target.empty()) throw ConfigError("select needs --target");
  if (cfg.format != "json" && cfg.format != "csv") {
    throw ConfigError("unknown format '" + cfg.format + "' (expected json or csv)");
  }
  if (cfg.threads < 1) throw ConfigError("--threads must be at least 1");
  PayoffSpec spec{parse_payoff_kind(cfg.payoff), cfg.split_fraction, cfg.split_seed};
  const OrderingSampleConfig sampling{cfg.gamma, cfg.seed, cfg.alpha};
  sampling.validate();
  spec.validate();

  LabeledDataset labeled = read_csv_dataset(cfg.input, cfg.target);
  if (labeled.data.candidates() == 0) {
    throw ConfigError("no candidate columns besides the target in '" + cfg.input + "'");
  }
  SelectionReport report =
      sequential_select(labeled.data, spec, sampling, cfg.threads);
  report.feature_names = labeled.candidate_names;

  for (std::size_t r = 0; r < report.rounds.size(); ++r) {
    const SelectionRound& round = report.rounds[r];
    out << "round " << r + 1 << ": " << round.remaining.size()
        << " candidates, critical value " << format("%.6f", round.critical) << "\n";
    out << "  feature               lambda          sigma            z\n";
    for (std::size_t k = 0; k < round.remaining.size(); ++k) {
      const FeatureEstimate& f = round.estimate.features[k];
      std::string name = feature_label(report, round.remaining[k]);
      name.resize(std::max<std::size_t>(name.size(), 16), ' ');
      out << "  " << name << format("%15.6g", f.lambda_hat)
          << format("%15.6g", f.sigma_hat) << format("%13.4f", f.z)
          << (std::abs(f.z) >= round.critical ? "  *" : "") << "\n";
    }
  }
  out << "accepted:";
  if (report.accepted.is_empty()) out << " (none)";
  for (int i : report.accepted.indices()) out << ' ' << feature_label(report, i);
  out << "\n";

  if (!cfg.out.empty()) {
    write_file(cfg.out, cfg.format == "json" ? to_json(report) : selection_csv(report));
  }
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.threads < 1) throw ConfigError("--threads must be at least 1");
  sim::SimConfig sc = cfg.sim;
  sc.method = sim::parse_method(cfg.method);
  sc.payoff = PayoffSpec{parse_payoff_kind(cfg.payoff), cfg.split_fraction, cfg.split_seed};
  sc.gamma = cfg.gamma;
  sc.alpha = cfg.alpha;
  sc.seed = cfg.seed;
  sc.validate();

  const sim::StudyResult result = sim::run_study(sc, cfg.threads);
  const sim::DiscrepancyTally& t = result.tally;
  out << "method " << sim::to_string(sc.method);
  if (sc.method == sim::Method::kLambda) out << " (" << to_string(sc.payoff.kind) << ")";
  out << ", |S| = " << sc.true_size << ", " << sc.trials << " trials\n";
  out << "exact " << t.exact << "  under1 " << t.under1 << "  under2+ " << t.under2plus
      << "  over1 " << t.over1 << "  over2+ " << t.over2plus << "  failures "
      << t.failures << "\n";

  if (!cfg.out.empty()) {
    write_file(cfg.out, sim::to_json(result));
    write_file(cfg.csv_out.empty() ? sibling_csv(cfg.out) : cfg.csv_out, sim::to_csv(result));
  } else if (!cfg.csv_out.empty()) {
    write_file(cfg.csv_out, sim::to_csv(result));
  }
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  if (cfg.source != "random" && cfg.source != "file") {
    throw ConfigError("unknown game source '" + cfg.source + "' (expected random or file)");
  }
  const bool from_file = cfg.source == "file" || !cfg.game_file.empty();
  std::vector<VerifyRow> rows;
  Json extra;

  auto matching = [&](const GameOracle& g) {
    if (!cfg.corrupt_prior) return verify_matching(g);
    return verify_matching(g, MatchedPrior(g.n()).perturbed(0, 1.01));
  };

  if (from_file) {
    if (cfg.game_file.empty()) throw ConfigError("file source needs --game-file");
    std::vector<double> table;
    try {
      const Json j = Json::parse(read_file(cfg.game_file));
      table = j.at("values").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed game file '" + cfg.game_file + "': " + e.what());
    }
    const int n = std::countr_zero(table.size());
    if (table.size() < 2 || (std::size_t{1} << n) != table.size()) {
      throw InputError("game file must list 2^n payoffs indexed by bitmask");
    }
    if (cfg.verify_n && *cfg.verify_n != n) {
      throw ConfigError("--n does not match the game file (n = " + std::to_string(n) + ")");
    }
    if (n > Capacity::kExact) throw CapacityError("game file too large for exact valuation");
    const GameOracle game = table_game(n, std::move(table));
    const std::vector<double> lambda = exact_lambdas(game);
    const std::vector<double> shapley = exact_shapleys(game);
    out << "feature        lambda       shapley\n";
    for (int i = 0; i < n; ++i) {
      out << format("%7.0f", i) << format("%14.10g", lambda[i])
          << format("%14.10g", shapley[i]) << "\n";
    }
    out << "expected payoff " << format("%.10g", expected_payoff(game)) << "\n";
    extra["lambda"] = lambda;
    extra["shapley"] = shapley;
    rows.push_back({"matching", n, 1, std::abs(matching(game))});
    if (n <= Capacity::kExpectedShapley) {
      rows.push_back({"expected_shapley", n, 1, verify_expected_shapley(game)});
    }
    if (n <= Capacity::kOrderings) {
      rows.push_back({"ordering", n, 1, verify_ordering_representation(game)});
    }
  } else {
    struct Check {
      const char* name;
      int n_max;
      int games;
    };
    const Check checks[] = {{"matching", 10, cfg.matching_games},
                            {"expected_shapley", 8, cfg.identity_games},
                            {"ordering", 7, cfg.identity_games}};
    if (cfg.verify_n && (*cfg.verify_n < 2 || *cfg.verify_n > 10)) {
      throw ConfigError("--n must be between 2 and 10 for random games");
    }
    for (const Check& c : checks) {
      for (int n = 2; n <= c.n_max; ++n) {
        if (cfg.verify_n && *cfg.verify_n != n) continue;
        double worst = 0.0;
        for (int g = 0; g < c.games; ++g) {
          const GameOracle game = table_game(n, random_game_table(cfg.seed, n, g));
          const std::string name = c.name;
          const double r = name == "matching"           ? std::abs(matching(game))
                           : name == "expected_shapley" ? verify_expected_shapley(game)
                                                        : verify_ordering_representation(game);
          worst = std::max(worst, r);
        }
        rows.push_back({c.name, n, c.games, worst});
      }
    }
  }

  bool passed = true;
  out << "identity             n   games   max_residual\n";
  Json jrows = Json::array();
  for (const VerifyRow& r : rows) {
    std::string name = r.check;
    name.resize(18, ' ');
    out << name << format("%3.0f", r.n) << format("%8.0f", r.games)
        << format("%15.3e", r.residual) << (r.residual < kVerifyTolerance ? "" : "  FAIL")
        << "\n";
    passed = passed && r.residual < kVerifyTolerance;
    jrows.push_back(Json{{"check", r.check}, {"n", r.n}, {"games", r.games},
                         {"max_residual", r.residual}});
  }
  out << (passed ? "all residuals below 1e-10\n" : "verification FAILED\n");

  if (!cfg.out.empty()) {
    Json j;
    j["seed"] = cfg.seed;
    j["source"] = from_file ? "file" : "random";
    j["tolerance"] = kVerifyTolerance;
    j["rows"] = std::move(jrows);
    if (!extra.is_null()) j.update(extra);
    j["passed"] = passed;
    write_file(cfg.out, j.dump(2) + "\n");
  }
  return passed ? kOk : kVerificationFailure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Feature selection by expected marginal contribution"};
  app.set_config("--config", "", "TOML-style file with default option values");
  app.require_subcommand(1);
  app.fallthrough();

  auto add_common = [&cfg](CLI::App* sub) {
    sub->add_option("--payoff", cfg.payoff, "r2, ar2, f, bic or rmse")->capture_default_str();
    sub->add_option("--split-fraction", cfg.split_fraction, "rmse estimation share")
        ->capture_default_str();
    sub->add_option("--split-seed", cfg.split_seed, "rmse split seed")->capture_default_str();
    sub->add_option("--gamma", cfg.gamma, "random orderings per round")->capture_default_str();
    sub->add_option("--alpha", cfg.alpha, "significance level")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    sub->add_option("--out", cfg.out, "output file");
    sub->add_option("--threads", cfg.threads, "worker threads (does not change results)")
        ->capture_default_str();
  };

  CLI::App* select = app.add_subcommand("select", "select features from a CSV dataset");
  select->add_option("--input", cfg.input, "CSV file with a header row")->required();
  select->add_option("--target", cfg.target, "dependent column name")->required();
  select->add_option("--format", cfg.format, "report format: json or csv")->capture_default_str();
  add_common(select);

  CLI::App* simulate = app.add_subcommand("simulate", "run a synthetic selection study");
  sim::SimConfig& sc = cfg.sim;
  simulate->add_option("--n", sc.n, "candidate features")->capture_default_str();
  simulate->add_option("--true-size", sc.true_size, "relevant features")->capture_default_str();
  simulate->add_option("--t-obs", sc.t_obs, "observations per dataset")->capture_default_str();
  simulate->add_option("--trials", sc.trials, "datasets")->capture_default_str();
  simulate->add_option("--method", cfg.method, "lambda, stepwise, aic, bic or oracle")
      ->capture_default_str();
  simulate->add_option("--coef-low", sc.coef_low)->capture_default_str();
  simulate->add_option("--coef-high", sc.coef_high)->capture_default_str();
  simulate->add_option("--noise-r2", sc.noise_r2_target, "target R^2 of the signal")
      ->capture_default_str();
  simulate->add_option("--exp-clip", sc.exp_clip)->capture_default_str();
  simulate->add_option("--log-floor", sc.log_floor)->capture_default_str();
  simulate->add_option("--p-enter", sc.p_enter, "stepwise entry p-value")->capture_default_str();
  simulate->add_option("--p-remove", sc.p_remove, "stepwise removal p-value")
      ->capture_default_str();
  simulate->add_option("--csv", cfg.csv_out, "table CSV path (default: --out with .csv)");
  add_common(simulate);

  CLI::App* verify = app.add_subcommand("verify", "check the valuation identities numerically");
  verify->add_option("--seed", cfg.seed, "seed for random games")->capture_default_str();
  verify->add_option("--source", cfg.source, "random or file")->capture_default_str();
  verify->add_option("--game-file", cfg.game_file, "JSON {\"values\": [v(mask)...]}");
  verify->add_option("--n", cfg.verify_n, "restrict random games to this size");
  verify->add_option("--games", cfg.matching_games, "random games per size for matching")
      ->capture_default_str();
  verify->add_option("--identity-games", cfg.identity_games,
                     "random games per size for the other identities")
      ->capture_default_str();
  verify->add_option("--out", cfg.out, "write residual table as JSON");
  verify->add_flag("--corrupt-prior", cfg.corrupt_prior)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (*select) return cmd_select(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("mdselect");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mdselect::cli
