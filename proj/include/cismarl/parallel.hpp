#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cismarl {

/// Splits [0, n) into at most `threads` contiguous chunks and runs
/// body(chunk, begin, end) for each, on worker threads when threads > 1.
/// Chunk boundaries depend only on n and threads.
template <class Body>
void for_each_chunk(std::size_t n, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    body(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  const std::size_t step = (n + threads - 1) / threads;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t c = 0; c < threads; ++c) {
    const std::size_t begin = std::min(n, c * step);
    const std::size_t end = std::min(n, begin + step);
    workers.emplace_back([&body, c, begin, end] { body(c, begin, end); });
  }
}

}  // namespace cismarl
