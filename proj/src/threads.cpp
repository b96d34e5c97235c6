#include "despeckle/threads.hpp"

#include "parallel.hpp"

namespace despeckle {

void set_thread_limit(int threads) {
#ifdef DESPECKLE_HAVE_OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int thread_limit() {
#ifdef DESPECKLE_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace despeckle
