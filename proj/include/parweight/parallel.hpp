#pragma once

#include <cstddef>
#include <functional>

namespace parweight {

// Process-wide worker count for the data-parallel loops below. Defaults to 1.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; callers
/// write results into per-index slots and reduce sequentially afterwards, so
/// results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace parweight
