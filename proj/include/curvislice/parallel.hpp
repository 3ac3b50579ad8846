// Worker-pool parallel map with deterministic, index-ordered results: outputs
// are identical for any thread count.
#pragma once

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "curvislice/core.hpp"

namespace curvislice {

inline int& thread_count_ref() {
  static int count = 0;  // 0 = auto
  return count;
}

inline void set_thread_count(int n) { thread_count_ref() = n; }

inline int effective_thread_count() {
  int n = thread_count_ref();
  if (n > 0) return n;
  if (const char* env = std::getenv("CURVISLICE_THREADS")) {
    int e = std::atoi(env);
    if (e > 0) return e;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// fn(i) for i in [0, count); each index is processed exactly once. Writers
// must target disjoint slots (typically out[i]) so results do not depend on
// the schedule. Exceptions are rethrown on the calling thread.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  int workers = std::min(effective_thread_count(), count);
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace curvislice
