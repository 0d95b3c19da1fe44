#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "ssv/error.hpp"

namespace ssv {

/// Runs fn(0..count-1) on up to `workers` threads and joins. If any task
/// throws, the exception of the lowest failing task index is rethrown after
/// all threads finish; `wrap(taskIndex, e)` may convert it first.
template <typename Fn>
void parallelFor(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Like parallelFor, but failures surface as PartitionError carrying the
/// partition id of the failing task.
template <typename Fn, typename IdOf>
void parallelForPartitions(std::size_t count, int workers, IdOf&& idOf, Fn&& fn) {
  parallelFor(count, workers, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const PartitionError&) {
      throw;
    } catch (const std::exception& e) {
      throw PartitionError(idOf(i), e.what());
    }
  });
}

}  // namespace ssv
