#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

#include "spb/config.hpp"

namespace spb {

// Splits [begin, end) into contiguous chunks whose interior boundaries are
// multiples of `align`, and runs fn(lo, hi) on each chunk from its own worker.
// Chunks are disjoint, so callers writing to chunk-owned output need no
// synchronization.
template <class Fn>
void parallel_for(std::uint64_t begin, std::uint64_t end, Fn&& fn,
                  std::uint64_t align = 1, unsigned workers = 0) {
  if (end <= begin) return;
  if (workers == 0) workers = limits().threads;
  std::uint64_t n = end - begin;
  if (workers <= 1 || n < 2 * align) {
    fn(begin, end);
    return;
  }
  std::uint64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::uint64_t lo = begin;
  while (lo < end) {
    std::uint64_t hi = (lo + chunk + align - 1) / align * align;
    hi = std::min(end, hi);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    lo = hi;
  }
  for (auto& t : pool) t.join();
}

}  // namespace spb
