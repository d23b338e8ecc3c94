#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thor2
{

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Results
/// must be written by index; the first exception thrown is rethrown.
template <typename Fn>
void ParallelFor(std::size_t n, Fn&& fn, unsigned max_threads = 0)
{
  unsigned threads = max_threads == 0 ? std::thread::hardware_concurrency() : max_threads;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++)
    {
      try
      {
        fn(i);
      }
      catch (...)
      {
        std::lock_guard lock(error_mutex);
        if (!error)
        {
          error = std::current_exception();
        }
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
  {
    pool.emplace_back(worker);
  }
  pool.clear();
  if (error)
  {
    std::rethrow_exception(error);
  }
}

}  // namespace thor2
