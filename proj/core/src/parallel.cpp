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

#include "adacof/parallel.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "adacof/errors.hpp"

namespace adacof {
namespace {

std::mutex g_control_mutex;
// global_control lifts TBB's worker limit (which defaults to the core count)
// and the arena pins the concurrency, so a requested count is honored even
// when it exceeds the hardware.
std::unique_ptr<tbb::global_control> g_control;
std::unique_ptr<tbb::task_arena> g_arena;
int g_threads = 0;

void configure(int threads) {
  g_arena.reset();
  g_control.reset();
  g_threads = threads;
  g_control = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                    static_cast<std::size_t>(threads));
  g_arena = std::make_unique<tbb::task_arena>(threads);
}

int default_threads() {
  if (const char* env = std::getenv("ADACOF_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return hardware_threads();
}

void ensure_initialized() {
  std::lock_guard lock(g_control_mutex);
  if (g_threads == 0) configure(default_threads());
}

}  // namespace

int hardware_threads() {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

void set_num_threads(int threads) {
  if (threads <= 0) throw ConfigError("thread count must be positive");
  std::lock_guard lock(g_control_mutex);
  configure(threads);
}

int num_threads() {
  ensure_initialized();
  return g_threads;
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body) {
  parallel_for_range(begin, end, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) body(i);
  });
}

void parallel_for_range(std::size_t begin, std::size_t end, std::size_t grain,
                        const std::function<void(std::size_t, std::size_t)>& body) {
  if (begin >= end) return;
  ensure_initialized();
  if (g_threads == 1 || end - begin <= grain) {
    body(begin, end);
    return;
  }
  g_arena->execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(begin, end, std::max<std::size_t>(grain, 1)),
                      [&](const tbb::blocked_range<std::size_t>& r) { body(r.begin(), r.end()); });
  });
}

std::size_t chunk_count(std::size_t n, std::size_t max_chunks) {
  return std::max<std::size_t>(1, std::min(n, max_chunks));
}

Chunk chunk_bounds(std::size_t n, std::size_t chunks, std::size_t index) {
  const std::size_t base = n / chunks;
  const std::size_t extra = n % chunks;
  const std::size_t begin = index * base + std::min(index, extra);
  return {begin, begin + base + (index < extra ? 1 : 0)};
}

}  // namespace adacof
