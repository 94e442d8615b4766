#include "riskx/parallel.hpp"

#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace riskx {

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

int resolve_workers(int hint) {
  if (hint == 0) return default_workers();
  return hint < 1 ? 1 : hint;
}

void for_each_block(std::int64_t blocks, int workers,
                    const std::function<void(std::int64_t)>& fn) {
  workers = resolve_workers(workers);
#ifdef _OPENMP
  if (workers > 1 && blocks > 1) {
#pragma omp parallel for num_threads(workers) schedule(dynamic)
    for (std::int64_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
#endif
  for (std::int64_t b = 0; b < blocks; ++b) fn(b);
}

}  // namespace riskx
