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

#ifndef MDSELECT_SELECTOR_HPP
#define MDSELECT_SELECTOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mdselect/feature_set.hpp"
#include "mdselect/linmodel.hpp"
#include "mdselect/mc_valuation.hpp"

namespace mdselect {

struct SelectionRound {
  /// Candidates still in play at the start of the round (original indices).
  std::vector<int> remaining;
  /// One entry per remaining candidate, same order.
  ValuationEstimate estimate;
  /// Candidates accepted this round (original indices, ascending).
  std::vector<int> accepted_batch;
  double critical = 0.0;

  friend bool operator==(const SelectionRound&, const SelectionRound&) = default;
};

struct SelectionReport {
  FeatureSet accepted;
  std::vector<SelectionRound> rounds;
  PayoffSpec payoff;
  std::int64_t gamma = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  /// Distinct coalitions evaluated, summed over rounds.
  std::int64_t payoff_evaluations = 0;
  /// Candidate names; may be empty.
  std::vector<std::string> feature_names;
};

bool operator==(const FeatureEstimate& a, const FeatureEstimate& b);
bool operator==(const ValuationEstimate& a, const ValuationEstimate& b);
bool operator==(const PayoffSpec& a, const PayoffSpec& b);
bool operator==(const SelectionReport& a, const SelectionReport& b);

/// Seed used for round r (0-based): the base seed for round 0, an
/// independent derived stream after that.
std::uint64_t round_seed(std::uint64_t seed, int round);

/// Sequential acceptance. Each round values the remaining candidates with
/// the already accepted ones as fixed regressors, then accepts every
/// candidate whose |z| reaches the critical value. Stops when a round
/// accepts nothing or no candidates remain. Errors from the payoff are
/// rethrown with the round index in the message.
SelectionReport sequential_select(const Dataset& data, const PayoffSpec& spec,
                                  const OrderingSampleConfig& cfg,
                                  int threads = 1);

std::string to_json(const SelectionReport& report);
/// Throws InputError on malformed JSON.
SelectionReport selection_report_from_json(const std::string& text);

}  // namespace mdselect

#endif  // MDSELECT_SELECTOR_HPP
