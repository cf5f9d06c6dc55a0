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

#ifndef MDSELECT_FEATURE_SET_HPP
#define MDSELECT_FEATURE_SET_HPP

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mdselect {

/// A coalition of candidate features, stored as a bitmask over indices
/// 0..n-1. Set operations require both operands to share the same n.
class FeatureSet {
 public:
  using Bits = std::uint64_t;
  static constexpr int kMaxFeatures = 63;

  /// Placeholder with n = 0; not a valid coalition for any game.
  FeatureSet() = default;
  FeatureSet(int n, Bits bits);

  static FeatureSet empty(int n) { return FeatureSet(n, 0); }
  static FeatureSet full(int n);
  static FeatureSet singleton(int n, int i);
  static FeatureSet from_indices(int n, std::span<const int> indices);

  int n() const { return n_; }
  Bits bits() const { return bits_; }
  int size() const { return std::popcount(bits_); }
  bool is_empty() const { return bits_ == 0; }
  bool contains(int i) const;

  FeatureSet with(int i) const;
  FeatureSet without(int i) const;

  /// Ascending member indices.
  std::vector<int> indices() const;
  std::string to_string() const;

  friend FeatureSet operator&(FeatureSet a, FeatureSet b);
  friend FeatureSet operator|(FeatureSet a, FeatureSet b);
  /// Set difference a \ b.
  friend FeatureSet operator-(FeatureSet a, FeatureSet b);
  friend bool operator==(FeatureSet a, FeatureSet b) = default;

 private:
  int n_ = 0;
  Bits bits_ = 0;
};

}  // namespace mdselect

#endif  // MDSELECT_FEATURE_SET_HPP
