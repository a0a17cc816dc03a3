#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace tsaw {

// Runs fn(begin, end, slot) over contiguous chunks of [0, n) on up to `threads`
// workers. Slot s always receives the same chunk for a given (n, threads), so
// per-slot accumulators merged in slot order give reproducible results.
template <class Fn>
void parallel_chunks(std::uint64_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::uint64_t>(std::max(1, threads));
  const std::uint64_t used = std::max<std::uint64_t>(1, std::min(workers, n));
  if (used == 1) {
    fn(std::uint64_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(used);
  for (std::uint64_t s = 0; s < used; ++s) {
    const std::uint64_t b = n * s / used, e = n * (s + 1) / used;
    pool.emplace_back([&, b, e, s] {
      try {
        fn(b, e, static_cast<std::size_t>(s));
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

inline std::size_t chunk_count(std::uint64_t n, int threads) {
  return static_cast<std::size_t>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(std::max(1, threads), n)));
}

}  // namespace tsaw
