#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dapce {

/// Runs fn(block) for block = 0..blocks-1 on up to `threads` threads. Work is
/// split by block index only, so results never depend on the thread count.
/// The first exception thrown by any block is rethrown on the caller.
template <typename Fn>
void parallel_blocks(std::size_t blocks, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(blocks, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = next++; b < blocks; b = next++) fn(b);
      } catch (...) {
        errors[w] = std::current_exception();
        next = blocks;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dapce
