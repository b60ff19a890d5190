#ifndef IQNET_PARALLEL_HPP
#define IQNET_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace iqnet {

/// Evaluates fn(0..count-1) on a small worker pool. Results come back in
/// index order, so the reduction is independent of scheduling.
template <typename Fn>
auto parallel_map(std::size_t count, Fn&& fn, unsigned threads = 0) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            out[i] = fn(i);
          } catch (...) {
            std::lock_guard lk(err_mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace iqnet

#endif  // IQNET_PARALLEL_HPP
