#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dart {

/// Runs `fn(i)` for every i in [0, count) on at most `max_workers` threads. Exceptions are caught
/// per index and returned in index order, so callers write results into pre-sized slots and the
/// output order never depends on completion order.
template <typename Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t count, std::size_t max_workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  auto run_one = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  std::size_t workers = std::min(count, std::max<std::size_t>(1, max_workers));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) run_one(i);
    return errors;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run_one(i);
      });
    }
  }
  return errors;
}

}  // namespace dart
