#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace liebn {

/// Execution policy for batch-level kernels. Parallel kernels compute each
/// element independently and reduce in a fixed sequential order, so Serial
/// and Parallel produce bitwise-identical results.
enum class ExecPolicy { Serial, Parallel };

/// Thread cap: min(omp_get_max_threads(), LIEBN_THREADS) when the environment
/// variable is set to a positive integer.
inline int max_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const char* env = std::getenv("LIEBN_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && cap < n) n = static_cast<int>(cap);
  }
  return n;
}

/// Runs body(i) for i in [0, count). Iterations must be independent.
/// Exceptions thrown by iterations are re-raised on the calling thread.
template <typename Body>
void parallel_for(ExecPolicy policy, std::int64_t count, const Body& body) {
#ifdef _OPENMP
  if (policy == ExecPolicy::Parallel && count > 1) {
    const int threads = max_threads();
    std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical(liebn_parallel_for_error)
        {
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#else
  (void)policy;
#endif
  for (std::int64_t i = 0; i < count; ++i) body(i);
}

}  // namespace liebn
