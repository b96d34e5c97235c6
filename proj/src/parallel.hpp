#pragma once

#include <cstddef>

#ifdef DESPECKLE_HAVE_OPENMP
#include <omp.h>
#endif

namespace despeckle {

// Work below this many items runs inline; thread start-up dominates otherwise.
inline constexpr std::size_t kParallelThreshold = 4096;

// Write-disjoint loop; results never depend on the schedule.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
#ifdef DESPECKLE_HAVE_OPENMP
    if (n >= kParallelThreshold && omp_get_max_threads() > 1) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); ++i) body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace despeckle
