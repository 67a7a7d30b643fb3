#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace ssep {

/// Runs fn(i) for i in [0, count) on the available cores. Callers write
/// results into per-index slots and reduce in index order afterwards, so the
/// outcome never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
}

}  // namespace ssep
