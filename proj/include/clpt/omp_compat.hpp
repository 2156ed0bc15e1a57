#pragma once

// Thin wrappers so translation units compile unchanged without OpenMP.

#if defined(_OPENMP)
#include <omp.h>
namespace clpt {
inline int omp_threads() { return omp_get_max_threads(); }
inline void omp_set_threads(int n) { omp_set_num_threads(n); }
inline bool omp_enabled() { return true; }
}  // namespace clpt
#else
namespace clpt {
inline int omp_threads() { return 1; }
inline void omp_set_threads(int) {}
inline bool omp_enabled() { return false; }
}  // namespace clpt
#endif
