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

#include "mdselect/feature_set.hpp"

#include <string>

#include "mdselect/errors.hpp"

namespace mdselect {
namespace {

FeatureSet::Bits low_mask(int n) {
  return n == 64 ? ~FeatureSet::Bits{0} : (FeatureSet::Bits{1} << n) - 1;
}

void check_same_universe(FeatureSet a, FeatureSet b) {
  if (a.n() != b.n()) {
    throw DomainError("feature sets over different universes (" +
                      std::to_string(a.n()) + " vs " + std::to_string(b.n()) +
                      ")");
  }
}

}  // namespace

FeatureSet::FeatureSet(int n, Bits bits) : n_(n), bits_(bits) {
  if (n < 1 || n > kMaxFeatures) {
    throw DomainError("feature count must be in [1, 63], got " +
                      std::to_string(n));
  }
  if ((bits & ~low_mask(n)) != 0) {
    throw DomainError("feature set has a bit at or above n = " +
                      std::to_string(n));
  }
}

FeatureSet FeatureSet::full(int n) {
  if (n < 1 || n > kMaxFeatures) return FeatureSet(n, 0);  // throws
  return FeatureSet(n, low_mask(n));
}

FeatureSet FeatureSet::singleton(int n, int i) { return empty(n).with(i); }

FeatureSet FeatureSet::from_indices(int n, std::span<const int> indices) {
  FeatureSet s = empty(n);
  for (int i : indices) s = s.with(i);
  return s;
}

bool FeatureSet::contains(int i) const {
  return i >= 0 && i < n_ && ((bits_ >> i) & 1U) != 0;
}

FeatureSet FeatureSet::with(int i) const {
  if (i < 0 || i >= n_) {
    throw DomainError("feature index " + std::to_string(i) +
                      " out of range for n = " + std::to_string(n_));
  }
  FeatureSet out = *this;
  out.bits_ |= Bits{1} << i;
  return out;
}

FeatureSet FeatureSet::without(int i) const {
  if (i < 0 || i >= n_) {
    throw DomainError("feature index " + std::to_string(i) +
                      " out of range for n = " + std::to_string(n_));
  }
  FeatureSet out = *this;
  out.bits_ &= ~(Bits{1} << i);
  return out;
}

std::vector<int> FeatureSet::indices() const {
  std::vector<int> out;
  out.reserve(size());
  for (Bits b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

std::string FeatureSet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (int i : indices()) {
    if (!first) out += ",";
    out += std::to_string(i);
    first = false;
  }
  return out + "}";
}

FeatureSet operator&(FeatureSet a, FeatureSet b) {
  check_same_universe(a, b);
  a.bits_ &= b.bits_;
  return a;
}

FeatureSet operator|(FeatureSet a, FeatureSet b) {
  check_same_universe(a, b);
  a.bits_ |= b.bits_;
  return a;
}

FeatureSet operator-(FeatureSet a, FeatureSet b) {
  check_same_universe(a, b);
  a.bits_ &= ~b.bits_;
  return a;
}

}  // namespace mdselect
