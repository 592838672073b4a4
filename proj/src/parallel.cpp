#include "nlflow/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef NLFLOW_HAVE_OPENMP
#include <omp.h>
#endif

namespace nlflow {

int configure_threads() {
#ifdef NLFLOW_HAVE_OPENMP
    if (const char* env = std::getenv("NLFLOW_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0 && n < omp_get_max_threads()) omp_set_num_threads(n);
        } catch (const std::exception&) {
        }
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int max_threads() {
#ifdef NLFLOW_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace nlflow
