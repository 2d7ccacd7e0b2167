#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace minflip {

inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i, scratch) for i in [0, count) across up to `threads` workers.
// Each worker owns one scratch object from make_scratch(). Work items must
// write only to their own output slots; iteration order is unspecified but
// results are position-addressed, so the overall result is deterministic.
template <typename Fn, typename MakeScratch>
void parallel_for(std::size_t count, int threads, Fn&& fn, MakeScratch&& make_scratch) {
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (n_workers <= 1) {
    auto scratch = make_scratch();
    for (std::size_t i = 0; i < count; ++i) fn(i, scratch);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (unsigned w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      auto scratch = make_scratch();
      for (;;) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        fn(i, scratch);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace minflip
