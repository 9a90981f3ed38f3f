#pragma once

#include <cstddef>
#include <functional>

namespace co2grav {

/// Worker count used when a caller passes 0: $CO2GRAV_THREADS if set to a
/// positive integer, otherwise std::thread::hardware_concurrency().
std::size_t default_thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// workers (0 = default_thread_count()). Each index is visited exactly once;
/// the chunking never changes which thread computes a given output, so
/// results that are written per index are independent of the thread count.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

} // namespace co2grav
