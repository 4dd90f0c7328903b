#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "pimcache/errors.hpp"

namespace pimcache {

// Splits [0, n) into `workers` contiguous near-equal ranges and runs
// fn(worker, begin, end) for each, one thread per non-empty range. The first
// exception (lowest worker index) is rethrown after all threads join.
template <typename Fn>
void parallel_ranges(std::size_t workers, std::size_t n, Fn&& fn) {
  if (workers == 0) throw InvalidArgument("workers must be >= 1");
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    if (n > 0) fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    const std::size_t base = n / workers;
    const std::size_t rem = n % workers;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t end = begin + base + (w < rem ? 1 : 0);
      threads.emplace_back([&, w, begin, end] {
        try {
          fn(w, begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
      begin = end;
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pimcache
