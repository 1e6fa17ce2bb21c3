#include "atl/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace atl {

namespace {
std::atomic<int> g_override{0};

int available_cores() {
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}
}  // namespace

int worker_threads() {
  if (const int o = g_override.load(); o > 0) return o;
  if (const char* env = std::getenv("ATL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return available_cores();
}

void set_worker_threads(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace atl
