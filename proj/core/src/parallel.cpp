#include "scflow/parallel.hpp"

#ifdef SCFLOW_HAVE_OPENMP
#include <omp.h>
#endif

namespace scflow {

void set_thread_limit(int threads) {
#ifdef SCFLOW_HAVE_OPENMP
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : default_threads);
#else
  (void)threads;
#endif
}

int thread_limit() {
#ifdef SCFLOW_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace scflow
