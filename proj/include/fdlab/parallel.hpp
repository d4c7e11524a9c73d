#pragma once

#include <cstddef>
#include <functional>

namespace fdlab {

/// Worker count from FDLAB_THREADS (default: hardware concurrency, at least 1).
int thread_count();

/// Runs body(i) for i in [0, count) on up to thread_count() threads. Each index
/// is processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fdlab
