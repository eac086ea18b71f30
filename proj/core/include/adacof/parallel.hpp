/*
 * Copyright 2026 The AdaCoF-CPP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>

namespace adacof {

// Worker cap for every parallel kernel. Defaults to ADACOF_THREADS when set,
// otherwise the hardware concurrency. Not safe to call while a parallel
// kernel is running.
void set_num_threads(int threads);
int num_threads();
int hardware_threads();

// Runs body(i) for i in [begin, end). Iterations must be independent; the
// result of any kernel built on this never depends on the worker count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

// Same, but hands out contiguous [lo, hi) ranges of at least `grain` items.
void parallel_for_range(std::size_t begin, std::size_t end, std::size_t grain,
                        const std::function<void(std::size_t, std::size_t)>& body);

// Fixed partition of [0, n) into at most `max_chunks` contiguous chunks. The
// partition depends only on n and max_chunks, so per-chunk accumulators
// reduced in chunk order give the same bits for any thread count.
struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::size_t chunk_count(std::size_t n, std::size_t max_chunks);
Chunk chunk_bounds(std::size_t n, std::size_t chunks, std::size_t index);

}  // namespace adacof
