#pragma once

// Deterministic chunked parallelism. Work is split into fixed-size chunks
// whose boundaries do not depend on the thread count, so any per-chunk
// accumulation combined in chunk order is bit-identical for 1..N threads.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace selpack {

inline constexpr std::size_t kParallelChunk = 4096;

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kParallelChunk) {
  return n == 0 ? 0 : (n - 1) / chunk + 1;
}

// Runs fn(chunk_index, begin, end) over [0, n) in chunks of `chunk` items.
// fn must only write to per-chunk or per-item state.
inline void parallel_chunks(std::size_t n, unsigned threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                            std::size_t chunk = kParallelChunk) {
  const std::size_t chunks = chunk_count(n, chunk);
  if (chunks == 0) return;
  if (threads <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      fn(c, c * chunk, std::min(n, (c + 1) * chunk));
    }
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers) {
        fn(c, c * chunk, std::min(n, (c + 1) * chunk));
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace selpack
