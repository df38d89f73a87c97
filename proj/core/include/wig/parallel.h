// Copyright 2026 The WIG Authors.
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

#ifndef WIG_PARALLEL_H_
#define WIG_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace wig {

// Resolves a requested thread count; values < 1 mean "all hardware threads".
int EffectiveThreads(int requested);

// Runs fn(0) ... fn(count - 1), spread over up to `threads` threads. Tasks
// must write to disjoint outputs; callers reduce afterwards in index order so
// results do not depend on scheduling. The exception of the lowest failing
// index is rethrown.
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& fn);

}  // namespace wig

#endif  // WIG_PARALLEL_H_
