#pragma once

// Include this instead of <omp.h> so the library still builds without OpenMP.

#if defined(_OPENMP)
#include <omp.h>
namespace robcomp {
constexpr bool use_omp = true;
}  // namespace robcomp
#else
#pragma GCC diagnostic ignored "-Wunknown-pragmas"
namespace robcomp {
constexpr bool use_omp = false;
}  // namespace robcomp
inline int omp_get_thread_num() { return 0; }
inline int omp_get_max_threads() { return 1; }
inline void omp_set_num_threads(int) {}
#endif
