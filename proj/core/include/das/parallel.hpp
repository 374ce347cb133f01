#pragma once

#include <cstddef>
#include <functional>

namespace das {

// Worker count from DAS_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count_from_env();

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace das
