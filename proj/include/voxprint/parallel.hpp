#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace voxprint {

/// Runs fn(begin, end) over contiguous chunks of [0, count) on up to
/// `workers` threads. Chunk boundaries depend only on count and workers.
/// The first exception thrown by any chunk is rethrown on the caller.
template <typename Fn>
void parallel_chunks(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  const std::size_t n = std::clamp<std::size_t>(
      workers < 1 ? 1 : static_cast<std::size_t>(workers), 1, count);
  if (n == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t begin = count * w / n;
    const std::size_t end = count * (w + 1) / n;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Per-index variant of parallel_chunks.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  parallel_chunks(count, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace voxprint
