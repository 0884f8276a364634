#include "genlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace genlab {
namespace {

std::atomic<std::size_t> g_threads{1};
constexpr std::size_t kMinParallelWork = 1u << 18;

}  // namespace

void set_num_threads(std::size_t n) { g_threads = std::max<std::size_t>(1, n); }

std::size_t num_threads() { return g_threads; }

void parallel_for(std::size_t begin, std::size_t end, std::size_t work,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t count = end > begin ? end - begin : 0;
  const std::size_t workers = std::min(g_threads.load(), count);
  if (workers <= 1 || work < kMinParallelWork) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::size_t i = begin; i < std::min(end, begin + chunk); ++i) body(i);
  for (auto& t : pool) t.join();
}

}  // namespace genlab
