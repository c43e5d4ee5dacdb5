#include "ivskew/parallel.hpp"

#include <atomic>
#include <thread>

namespace ivskew {

namespace {
std::atomic<bool> g_parallel_enabled{true};
}

void set_parallel_enabled(bool enabled) { g_parallel_enabled = enabled; }

bool parallel_enabled() {
#ifdef _OPENMP
    return g_parallel_enabled.load();
#else
    return false;
#endif
}

int worker_threads() {
#ifdef _OPENMP
    return parallel_enabled() ? omp_get_max_threads() : 1;
#else
    return 1;
#endif
}

}  // namespace ivskew
