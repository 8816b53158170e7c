#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cguide {

inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

namespace detail {
inline thread_local bool in_parallel_worker = false;
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. Nested calls from a
/// worker run serially. Results must be written
/// to per-index slots; fn must not touch shared mutable state. The first
/// exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn) {
  const size_t workers = std::min<size_t>(worker_count(), n);
  if (workers <= 1 || detail::in_parallel_worker) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    const size_t lo = w * chunk;
    const size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi] {
      detail::in_parallel_worker = true;
      try {
        for (size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cguide
