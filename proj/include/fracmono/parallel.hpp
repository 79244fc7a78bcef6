#ifndef FRACMONO_PARALLEL_HPP
#define FRACMONO_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fracmono {

/// Process-wide worker count for independent tasks; 1 runs inline.
inline std::atomic<unsigned>& thread_count_slot() {
  static std::atomic<unsigned> n{1};
  return n;
}

inline void set_thread_count(unsigned n) { thread_count_slot() = n == 0 ? 1 : n; }
inline unsigned thread_count() { return thread_count_slot(); }

/// Runs body(i) for i in [0, n). Each index writes only its own output slot,
/// so results do not depend on the worker count. The first exception is
/// rethrown after all workers stop.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace fracmono

#endif  // FRACMONO_PARALLEL_HPP
