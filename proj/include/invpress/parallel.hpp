#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace invpress {

/// Worker cap from INVPRESS_THREADS (0 or unset = auto).
inline int max_threads() {
  const char* env = std::getenv("INVPRESS_THREADS");
  long requested = 0;
  if (env != nullptr) requested = std::strtol(env, nullptr, 10);
  if (requested <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return static_cast<int>(requested);
}

/// Runs fn(i) for i in [0, n). Each index writes only its own slot, so
/// results are identical to the serial order regardless of scheduling.
inline void parallel_for(long n, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  const int workers = std::min<long>(max_threads(), n);
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<bool> failed{false};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n && !failed.load(); i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace invpress
