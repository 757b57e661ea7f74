#include "cgp/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#if defined(CGP_HAVE_OPENMP)
#include <omp.h>
#endif

namespace cgp::parallel {

namespace {
std::atomic<int> g_threads{0};
}

void set_num_threads(int n) { g_threads.store(n > 0 ? n : 0); }

int num_threads() {
  int n = g_threads.load();
  if (n > 0) return n;
#if defined(CGP_HAVE_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int threads_from_env() {
  const char* raw = std::getenv("CONSERV_GP_THREADS");
  if (raw == nullptr) return 0;
  try {
    std::size_t used = 0;
    int n = std::stoi(raw, &used);
    if (used != std::string(raw).size() || n <= 0) return 0;
    return n;
  } catch (const std::exception&) {
    return 0;
  }
}

bool openmp_enabled() {
#if defined(CGP_HAVE_OPENMP)
  return true;
#else
  return false;
#endif
}

}  // namespace cgp::parallel
