#pragma once

#include <cstddef>
#include <functional>

namespace genlab {

// Worker count for batch-parallel sections (default 1). Each index is
// processed by exactly one worker with the same arithmetic, so results do not
// depend on the worker count.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(i) for i in [begin, end). `work` is a rough flop estimate; small
// jobs stay on the calling thread.
void parallel_for(std::size_t begin, std::size_t end, std::size_t work,
                  const std::function<void(std::size_t)>& body);

}  // namespace genlab
