#pragma once

#include <cstddef>
#include <functional>

namespace fpforge {

// Worker count: hardware concurrency, capped by FPFORGE_THREADS when set.
std::size_t worker_count();

// Runs fn(i) for every i in [0, n). Work is split into contiguous index
// blocks; fn must only write to per-index state. The first exception thrown
// by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fpforge
