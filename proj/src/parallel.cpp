#include "fictsolve/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fictsolve {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }

int num_threads() { return g_threads.load(); }

int threads_from_env(int fallback) {
  const char* v = std::getenv("FICTSOLVE_THREADS");
  if (v == nullptr) return fallback;
  try {
    int n = std::stoi(v);
    return n >= 1 ? n : fallback;
  } catch (...) {
    return fallback;
  }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
  const auto t = static_cast<std::size_t>(num_threads());
  if (t <= 1 || n < 2 * min_chunk) {
    body(0, n);
    return;
  }
  const std::size_t workers = std::min(t, n / min_chunk);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fictsolve
