#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ivskew {

/// Enables or disables OpenMP execution of the batch/sweep kernels.
/// The serial path is the testing reference; both paths run the same
/// per-index bodies and produce bit-identical results.
void set_parallel_enabled(bool enabled);
bool parallel_enabled();

/// Number of worker threads the parallel path would use.
int worker_threads();

/// Runs body(i) for i in [0, n). Independent iterations only; results must
/// be written to per-index slots so that merge order is fixed.
template <typename F>
void parallel_for(int n, F&& body) {
    if (parallel_enabled()) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int i = 0; i < n; ++i) body(i);
    } else {
        for (int i = 0; i < n; ++i) body(i);
    }
}

}  // namespace ivskew
