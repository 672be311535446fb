// Copyright 2026 The fedsim Authors. All Rights Reserved.
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

#ifndef FEDSIM_PARALLEL_H_
#define FEDSIM_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace fedsim {

// Calls fn(i) for every i in [0, n) using up to `num_threads` threads
// (0 or 1 means inline on the caller). Tasks are claimed dynamically, so fn
// must not depend on execution order. The first exception thrown by any task
// is rethrown after all threads have joined.
void ParallelFor(std::size_t n, std::size_t num_threads,
                 const std::function<void(std::size_t)>& fn);

}  // namespace fedsim

#endif  // FEDSIM_PARALLEL_H_
