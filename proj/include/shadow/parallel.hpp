#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "shadow/types.hpp"

namespace shadow {

/// Name of the environment variable capping the number of worker threads.
inline constexpr const char *kWorkersEnv = "SHADOW_MAX_WORKERS";

/// Worker count: hardware concurrency, capped by SHADOW_MAX_WORKERS.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv(kWorkersEnv)) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1)
        n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (...) {
      // unparsable cap is ignored
    }
  }
  return n;
}

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index
/// is visited exactly once; results must be written to per-index slots so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any task is rethrown on the calling thread.
template <class Fn> void parallel_for(Index n, Fn &&fn) {
  if (n <= 0)
    return;
  const unsigned workers =
      static_cast<unsigned>(std::min<Index>(worker_count(), n));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back(worker);
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace shadow
