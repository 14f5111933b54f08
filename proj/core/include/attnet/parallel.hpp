#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace attnet {

// Splits [0, n) into n_threads contiguous ranges and runs fn(begin, end,
// worker) on each. Workers must write only worker-local state; callers merge
// partial results in worker order so a run is reproducible for a fixed
// thread count.
inline void parallel_for(std::size_t n, unsigned n_threads,
                         const std::function<void(std::size_t, std::size_t, unsigned)>& fn) {
  if (n == 0) return;
  if (n_threads <= 1 || n == 1) {
    fn(0, n, 0);
    return;
  }
  if (n_threads > n) n_threads = static_cast<unsigned>(n);
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  for (unsigned w = 1; w < n_threads; ++w) {
    const std::size_t begin = w * chunk;
    if (begin >= n) break;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back(fn, begin, end, w);
  }
  fn(0, std::min(n, chunk), 0);
  for (auto& t : pool) t.join();
}

inline unsigned default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace attnet
