#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace sparse_saddle {

/// Worker count: hardware concurrency capped by SPARSE_SADDLE_THREADS.
inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("SPARSE_SADDLE_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < n) n = cap;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return n;
}

/// Runs fn(i) for i in [0, count). Each index writes only its own slot, so the
/// result is independent of the worker count.
template <class Fn>
inline void parallel_for(std::size_t count, const Fn& fn) {
  const int workers = static_cast<int>(std::min(static_cast<std::size_t>(worker_count()), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < count; i += static_cast<std::size_t>(workers)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace sparse_saddle
