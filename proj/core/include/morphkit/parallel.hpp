#pragma once

#include <cstddef>
#include <functional>

namespace morphkit {

// Worker count: min(hardware_concurrency, MORPHKIT_THREADS) when the
// environment variable is set, at least 1.
int worker_count();

// Static chunked parallel loop over [0, n). The callable must only
// write to per-index state; results are therefore independent of the
// worker count and schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace morphkit
