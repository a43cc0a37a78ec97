#pragma once

// Slab-parallel loops. Work is split into a fixed number of slabs that does
// not depend on the thread count, and slab partial sums are combined by
// pairwise reduction, so results are bitwise independent of --threads.

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace qdefect {

inline std::atomic<int>& thread_count_setting() {
  static std::atomic<int> n{1};
  return n;
}

inline void set_thread_count(int n) { thread_count_setting() = std::max(1, n); }
inline int thread_count() { return thread_count_setting().load(); }

/// Runs body(slab) for slab in [0, n_slabs) on up to thread_count() threads.
inline void for_each_slab(int n_slabs, const std::function<void(int)>& body) {
  const int workers = std::min(thread_count(), n_slabs);
  if (workers <= 1) {
    for (int s = 0; s < n_slabs; ++s) body(s);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int s = next++; s < n_slabs; s = next++) body(s);
    });
  }
  for (auto& t : pool) t.join();
}

inline double pairwise_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  while (v.size() > 1) {
    std::size_t half = (v.size() + 1) / 2;
    for (std::size_t i = 0; i + half < v.size(); ++i) v[i] += v[i + half];
    v.resize(half);
  }
  return v[0];
}

/// Sum of slab_sum(slab) over slabs, reduced pairwise in slab order.
inline double slab_reduce(int n_slabs, const std::function<double(int)>& slab_sum) {
  std::vector<double> partial(n_slabs, 0.0);
  for_each_slab(n_slabs, [&](int s) { partial[s] = slab_sum(s); });
  return pairwise_sum(std::move(partial));
}

}  // namespace qdefect
