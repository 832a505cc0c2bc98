#pragma once

#include <cstddef>
#include <functional>

namespace sot {

/// Upper bound on worker threads used by the library. Defaults to the
/// hardware concurrency; 0 restores the default.
void set_max_threads(unsigned count);
unsigned max_threads();

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks are
/// disjoint, so bodies that write only their own indices give results
/// independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace sot
