#pragma once

#include <cstddef>
#include <functional>

namespace rdfl::harness {

/// Worker count from RDFL_THREADS (unset or 0: hardware concurrency), at least 1.
std::size_t worker_count();

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index runs
/// exactly once; results must be written to per-index slots so the caller can
/// reduce them in index order. The first exception thrown is rethrown.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace rdfl::harness
