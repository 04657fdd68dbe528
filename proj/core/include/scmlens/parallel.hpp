#pragma once

#include <cstddef>
#include <functional>

namespace scmlens {

/// Worker count from SCMLENS_THREADS (0 or unset = hardware concurrency).
std::size_t configured_threads();

/// Override for the current process; 0 restores the environment default.
void set_thread_override(std::size_t threads);

/// Runs body(i) for i in [0, count). Each index is visited exactly once;
/// callers write results into per-index slots so output never depends on
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace scmlens
