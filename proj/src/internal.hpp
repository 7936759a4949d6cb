#pragma once

// Helpers shared by the library sources; not installed.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace pmufdi::detail {

// Independent, reproducible RNG streams keyed by (seed, stream tag).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream,
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

enum RngStream : std::uint32_t {
  kStreamModel = 1,
  kStreamNoise = 2,
  kStreamAttack = 3,
  kStreamColumnNoise = 4,
  kStreamColumnChoice = 5,
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads; contiguous chunks.
inline void parallel_for(std::size_t n, int jobs,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pmufdi::detail
