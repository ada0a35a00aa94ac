// Copyright 2026 The oodbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OODBENCH_PARALLEL_HPP_
#define OODBENCH_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace oodbench {

// Worker count: OODBENCH_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. If any call
// throws, the exception from the lowest failing index is rethrown after all
// workers stop, so failures are reported deterministically.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace oodbench

#endif  // OODBENCH_PARALLEL_HPP_
