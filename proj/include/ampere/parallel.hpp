#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace ampere {

// Run fn(k) for k in [0, n). threads == 0 asks for one thread per core;
// threads <= 1 (or a tiny n) degenerates to the plain serial loop, which is
// also the path every deterministic artifact is produced on: callers must
// keep fn(k) independent of execution order.
template <class F>
inline void parallel_for(std::size_t n, int threads, F&& fn) {
  if (threads == 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    threads = hc > 0 ? static_cast<int>(hc) : 1;
  }
  if (threads <= 1 || n < 2) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  const std::size_t used =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (std::size_t t = 0; t < used; ++t)
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < n;) fn(k);
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace ampere
