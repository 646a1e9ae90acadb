#pragma once

#include <cstddef>
#include <functional>

namespace isl::util {

/// Worker count for data-pipeline parallelism, read from ISL_THREADS
/// (default 1, clamped to at least 1).
int pipeline_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous index ranges, so results written by index are independent of
/// the thread count. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace isl::util
