#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace prism {

// Every parallel kernel in this library also runs in Serial mode. The loop
// bodies are identical and each iteration writes disjoint outputs, so the two
// modes produce bit-identical results; the unit tests assert this and the
// kernel benchmark compares their wall times.
enum class Execution { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace prism
