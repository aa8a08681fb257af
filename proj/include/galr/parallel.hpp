#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace galr {

namespace detail {
inline int& thread_budget() {
  thread_local int budget = 1;
  return budget;
}
}  // namespace detail

// Sets the number of worker threads kernels may use on the calling thread
// for the lifetime of the scope. Kernels partition work so that every output
// element is produced by exactly one worker with a fixed reduction order, so
// results do not depend on the thread count.
class ThreadScope {
 public:
  explicit ThreadScope(int threads) : saved_(detail::thread_budget()) {
    detail::thread_budget() = std::max(1, threads);
  }
  ~ThreadScope() { detail::thread_budget() = saved_; }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  int saved_;
};

inline int current_threads() { return detail::thread_budget(); }

// Runs fn(begin, end) over a static partition of [0, n). `min_grain` keeps
// tiny loops inline.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t min_grain, Fn&& fn) {
  const std::size_t threads = static_cast<std::size_t>(current_threads());
  if (threads <= 1 || n < 2 * std::max<std::size_t>(min_grain, 1)) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  const std::size_t parts = std::min(threads, n / std::max<std::size_t>(min_grain, 1));
  const std::size_t step = (n + parts - 1) / parts;
  std::vector<std::jthread> workers;
  workers.reserve(parts - 1);
  for (std::size_t p = 1; p < parts; ++p) {
    const std::size_t begin = p * step;
    const std::size_t end = std::min(n, begin + step);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(n, step));
}

}  // namespace galr
