#pragma once

#include <cstddef>
#include <functional>

namespace seed {

/// Worker cap: SEED_CL_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so writes to per-index slots stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace seed
