#pragma once

#include <thread>
#include <vector>

namespace tigh {

// Static block partition of [0, n) over `threads` workers. Every call site
// writes to disjoint per-index slots, so results never depend on scheduling.
template <class Fn>
void parallel_for(long long n, int threads, Fn fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  int workers = static_cast<int>(std::min<long long>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    long long lo = n * w / workers;
    long long hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (long long i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace tigh
