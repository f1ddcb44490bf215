#pragma once

#include <cstddef>
#include <functional>

namespace enda {

// Worker cap: ENDA_THREADS if set (>=1), otherwise hardware concurrency.
std::size_t worker_count();

// Static-partition parallel loop. fn(i) must touch only state owned by index
// i; the partition is a pure function of n, so results are identical for any
// worker count. Exceptions are captured and the first one is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace enda
