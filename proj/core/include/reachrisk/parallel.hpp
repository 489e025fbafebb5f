#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace reachrisk {

/// Splits [0, n) into `workers` contiguous chunks and runs fn(chunk, begin, end)
/// on each, one thread per chunk beyond the first. Chunk boundaries depend only
/// on n and workers.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, std::max<std::size_t>(n, 1)));
  auto bounds = [&](std::size_t c) { return n * c / workers; };
  if (workers == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (std::size_t c = 1; c < workers; ++c) {
    threads.emplace_back([&, c] {
      try {
        fn(c, bounds(c), bounds(c + 1));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  try {
    fn(std::size_t{0}, bounds(0), bounds(1));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  threads.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::size_t default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace reachrisk
