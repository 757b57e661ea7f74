#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace cgp::parallel {

// Thread count used by the OpenMP kernels. 1 selects the bit-reproducible mode.
void set_num_threads(int n);
int num_threads();

// Reads CONSERV_GP_THREADS; returns 0 when unset or not a positive integer.
int threads_from_env();

bool openmp_enabled();

// Runs body(i) for i in [0, n) with a static schedule. Each index owns its
// output slot, so results do not depend on the thread count. The exception
// thrown by the lowest failing index is rethrown after the loop.
template <class Body>
void for_each_index(std::ptrdiff_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n > 0 ? n : 0));
#if defined(CGP_HAVE_OPENMP)
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (n > 1)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cgp::parallel
