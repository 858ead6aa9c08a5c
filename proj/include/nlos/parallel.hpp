#pragma once

#include <cstddef>
#include <exception>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nlos {

// Worker count used when a caller passes threads <= 0.
inline int default_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int resolve_threads(int threads) { return threads > 0 ? threads : default_threads(); }

// Splits [0, n) into `workers` contiguous chunks and runs fn(worker, begin, end) on each.
// Chunk boundaries depend only on (n, workers), so any per-worker partial results can be
// merged in worker order for bit-reproducible output. Exceptions thrown by fn are rethrown
// on the calling thread (first worker index wins).
template <class Fn> void parallel_chunks(std::size_t n, int workers, Fn &&fn) {
  workers = resolve_threads(workers);
  if (workers <= 1 || n < 2) {
    fn(0, std::size_t{0}, n);
    return;
  }
  if (std::size_t(workers) > n)
    workers = int(n);
  std::vector<std::exception_ptr> errors(workers);
#pragma omp parallel for schedule(static, 1) num_threads(workers)
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = n * std::size_t(w) / std::size_t(workers);
    const std::size_t end = n * std::size_t(w + 1) / std::size_t(workers);
    try {
      fn(w, begin, end);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace nlos
