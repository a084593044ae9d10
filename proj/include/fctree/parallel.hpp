#pragma once

#include <atomic>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fctree::par {

namespace detail {
inline std::atomic<int>& jobs_state() {
    static std::atomic<int> jobs{1};
    return jobs;
}
} // namespace detail

inline int jobs() { return detail::jobs_state().load(std::memory_order_relaxed); }

inline void set_jobs(int n) { detail::jobs_state().store(n < 1 ? 1 : n, std::memory_order_relaxed); }

// Index-parallel loop. Each iteration must write only to its own slot of any
// shared output so that results are independent of scheduling; the jobs==1
// path is the serial reference the tests compare against.
template <typename F>
void for_index(int n, F&& fn) {
    const int j = jobs();
#ifdef _OPENMP
    if (j > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(j)
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
#endif
    for (int i = 0; i < n; ++i) {
        fn(i);
    }
}

} // namespace fctree::par
