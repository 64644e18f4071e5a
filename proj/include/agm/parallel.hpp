#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace agm {

/// Evaluates fn(0..count-1) on up to `workers` threads and returns the results
/// in index order. Each call must be independent of scheduling (derive its
/// RNG from the index), which makes the output identical for any worker count.
/// If several calls throw, the exception of the lowest index is rethrown.
template <typename F>
auto parallel_map(std::size_t count, unsigned workers, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using T = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);

  auto drain = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::atomic<std::size_t> next{0};
  const unsigned threads = static_cast<unsigned>(
      std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    drain(next);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back([&] { drain(next); });
    for (auto& th : pool) th.join();
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace agm
