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

#ifndef MDSELECT_RNG_HPP
#define MDSELECT_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mdselect {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent seed from a base seed and a path of stream ids,
/// e.g. (seed, trial, round). The result depends only on its arguments.
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path);

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Unbiased draw from {0, ..., bound-1}; bound must be positive.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

/// Uniform draw from [0, 1) using the top 53 bits of one engine output.
double uniform_unit(Rng& rng);

}  // namespace mdselect

#endif  // MDSELECT_RNG_HPP
