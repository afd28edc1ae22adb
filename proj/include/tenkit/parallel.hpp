#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace tenkit {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs fn(worker, begin, end) over [0, n) split into fixed contiguous chunks.
// The chunk boundaries depend only on (n, threads), never on scheduling, so
// any per-chunk state merged in worker order is deterministic.
template <class Fn>
void parallel_chunks(std::uint64_t n, unsigned threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2048) {
    if (n > 0) fn(0u, std::uint64_t{0}, n);
    return;
  }
  if (threads > n) threads = static_cast<unsigned>(n);
  std::uint64_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    std::uint64_t b = std::uint64_t{w} * chunk;
    std::uint64_t e = b + chunk < n ? b + chunk : n;
    if (b >= e) break;
    pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace tenkit
