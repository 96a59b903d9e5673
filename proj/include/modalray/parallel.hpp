/**
 * @file parallel.hpp
 * @brief Index-parallel loop over a fixed worker count.
 */
#ifndef MODALRAY_PARALLEL_HPP
#define MODALRAY_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace modalray {

/// Worker count from an explicit request, else MODALRAY_THREADS, else the hardware.
unsigned resolve_threads(unsigned requested);

/// Runs fn(i) for i in [0, n). Results must be stored by index; the first
/// exception in index order is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace modalray

#endif
