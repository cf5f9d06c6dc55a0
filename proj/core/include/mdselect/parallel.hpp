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

#ifndef MDSELECT_PARALLEL_HPP
#define MDSELECT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mdselect {

/// Runs body(0) .. body(count-1) on up to `threads` worker threads.
/// Work items are claimed dynamically, so body must not depend on which
/// thread runs it. If any item throws, the exception from the lowest
/// failing index is rethrown after all workers have joined.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace mdselect

#endif  // MDSELECT_PARALLEL_HPP
