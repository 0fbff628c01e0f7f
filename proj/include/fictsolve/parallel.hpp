#pragma once

#include <cstddef>
#include <functional>

namespace fictsolve {

// Thread count used by the row-parallel kernels. 1 is the reproducibility reference.
void set_num_threads(int n);
int num_threads();

// Reads FICTSOLVE_THREADS; returns fallback when unset or invalid.
int threads_from_env(int fallback = 1);

// Runs body(begin, end) over [0, n) split into contiguous chunks. Each index is
// handled by exactly one call, so results are independent of the thread count
// whenever body writes only to its own indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 4096);

}  // namespace fictsolve
