#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tclqr {

// Runs fn(0..count-1), each index exactly once, on up to `threads` workers
// (0 = hardware concurrency).  Indices are handed out by an atomic counter,
// so callers must make per-index work independent; determinism is the
// caller's job and is achieved by writing results into per-index slots and
// reducing sequentially afterwards.
inline void parallelFor(std::size_t count, int threads,
                        const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  unsigned int want = threads > 0 ? static_cast<unsigned int>(threads)
                                  : std::thread::hardware_concurrency();
  if (want == 0) want = 1;
  if (want > count) want = static_cast<unsigned int>(count);
  if (want == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex errorLock;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        {
          std::lock_guard<std::mutex> hold(errorLock);
          if (!error) error = std::current_exception();
        }
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(want);
  for (unsigned int i = 0; i < want; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tclqr
