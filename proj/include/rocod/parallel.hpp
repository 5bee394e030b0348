#pragma once

#include <omp.h>

namespace rocod {

// Worker-pool sizing for the OpenMP kernels. 0 means "one thread per
// processor"; the processor count is used (not omp_get_max_threads, which
// reflects the most recent omp_set_num_threads call).
// All parallel kernels write per-object results only and perform cross-object
// reductions serially in index order, so numeric output never depends on the
// thread count set here.
inline int hardware_threads() {
    return omp_get_num_procs();
}

inline int resolve_threads(int requested) {
    return requested > 0 ? requested : hardware_threads();
}

inline void set_threads(int requested) {
    omp_set_num_threads(resolve_threads(requested));
}

inline int current_max_threads() {
    return hardware_threads();
}

} // namespace rocod
