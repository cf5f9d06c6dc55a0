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

#ifndef MDSELECT_TOOLS_CLI_COMMANDS_HPP
#define MDSELECT_TOOLS_CLI_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdselect/simlab.hpp"

namespace mdselect::cli {

enum ExitCode : int {
  kOk = 0,
  kParseError = 2,
  kNumericError = 3,
  kConfigError = 4,
  kVerificationFailure = 5,
};

enum class Command { kSelect, kSimulate, kVerify };

struct RunConfig {
  Command command = Command::kSelect;

  // select
  std::string input;
  std::string target;
  std::string format = "json";  // json | csv

  // shared
  std::string payoff = "ar2";
  double split_fraction = 0.8;
  std::uint64_t split_seed = 0;
  std::int64_t gamma = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;

  // simulate; payoff, gamma, alpha, seed above are copied in
  sim::SimConfig sim;
  std::string method = "lambda";
  std::string csv_out;

  // verify
  std::string source = "random";  // random | file
  std::string game_file;
  std::optional<int> verify_n;
  int matching_games = 100;
  int identity_games = 20;
  bool corrupt_prior = false;
};

/// Tolerance for the verify command's identity residuals.
inline constexpr double kVerifyTolerance = 1e-10;

int cmd_select(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);

/// Parses argv, dispatches, and maps exceptions to exit codes. Diagnostics
/// go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdselect::cli

#endif  // MDSELECT_TOOLS_CLI_COMMANDS_HPP
