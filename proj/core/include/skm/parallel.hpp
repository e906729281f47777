#pragma once

#include <cstdint>
#include <functional>

namespace skm {

/// Worker count actually used: `requested` when positive, otherwise the
/// hardware concurrency; either way capped by the SKM_THREADS environment
/// variable when that is set to a positive integer.
int resolve_workers(int requested);

/// Runs fn(0) .. fn(count - 1), spreading the calls over up to `workers`
/// threads.  Blocks until all calls finished; the first exception thrown by
/// fn is rethrown on the calling thread.
void parallel_for(std::int64_t count, int workers,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace skm
