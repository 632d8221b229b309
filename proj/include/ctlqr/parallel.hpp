#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ctlqr::par {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Serial reference for the parallel kernels below; kept for testing and
/// benchmarking against the OpenMP path.
template <class F>
void serial_for(std::size_t n, F&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

/// Runs fn(i) for i in [0, n) across an OpenMP team. Each index must write
/// only to its own output slot; reductions over the slots are the caller's
/// job and must be done in index order so results do not depend on the
/// thread count. threads == 0 uses the OpenMP default; threads == 1 (or a
/// non-OpenMP build) degenerates to the serial loop.
template <class F>
void parallel_for(std::size_t n, F&& fn, int threads = 0) {
#ifdef _OPENMP
  if (threads != 1) {
    const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)threads;
#endif
  serial_for(n, fn);
}

}  // namespace ctlqr::par
