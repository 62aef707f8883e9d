#include "grok/kernels.hpp"

#include <cstdlib>

namespace grok::kernels {

namespace {
Exec g_exec = Exec::parallel;
bool g_threads_initialized = false;
}  // namespace

Exec execution() { return g_exec; }

void set_execution(Exec e) { g_exec = e; }

void init_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("GROK_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
  g_threads_initialized = true;
}

int thread_count() {
  if (!g_threads_initialized) init_threads();
#ifdef _OPENMP
  int n = 1;
#pragma omp parallel
  {
#pragma omp single
    n = omp_get_num_threads();
  }
  return n;
#else
  return 1;
#endif
}

}  // namespace grok::kernels
