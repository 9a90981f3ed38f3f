#include "co2grav/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace co2grav {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("CO2GRAV_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0)
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0)
    return;
  if (threads == 0)
    threads = default_thread_count();
  threads = std::min(threads, n);
  if (threads <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end)
        break;
      pool.emplace_back([&, t, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace co2grav
