#pragma once

#include <cstddef>
#include <functional>

namespace gzhybrid {

// Worker count for data-parallel loops: GZHYBRID_THREADS if set (clamped to
// at least 1), otherwise the hardware concurrency.
std::size_t worker_count();

// Runs fn(begin, end) over a static partition of [0, n) across workers and
// joins. Writes must be disjoint per index; under that condition results are
// identical for any worker count.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace gzhybrid
