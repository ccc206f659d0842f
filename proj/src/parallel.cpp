#include "nbtc/parallel.h"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nbtc {

void configure_threads_from_env() {
  const char* env = std::getenv("NBTC_THREADS");
  if (env == nullptr) return;
  int n = 0;
  try {
    n = std::stoi(env);
  } catch (...) {
    return;
  }
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace nbtc
