#pragma once

#include <cstdint>
#include <functional>

namespace eqot {

/// Worker count: min(hardware_concurrency, EQOT_THREADS if set), at least 1.
int worker_count();

/// Runs fn(i) for i in [begin, end) across workers. Chunks are contiguous and
/// results must be written to disjoint locations, so output does not depend
/// on the worker count.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace eqot
