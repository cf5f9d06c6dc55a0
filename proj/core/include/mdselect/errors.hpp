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

#ifndef MDSELECT_ERRORS_HPP
#define MDSELECT_ERRORS_HPP

#include <stdexcept>

namespace mdselect {

// Malformed or non-finite input data (CSV contents, matrices).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A quantity is undefined for the given arguments.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The request exceeds an enumeration limit.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Invalid configuration values or missing required options.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace mdselect

#endif  // MDSELECT_ERRORS_HPP
