#pragma once

#include <cstddef>
#include <functional>

namespace ckn {

// Process-wide worker count used by parallel_for. Defaults to 1.
void set_num_threads(unsigned n);
unsigned num_threads();

// Runs body(i) for every i in [begin, end). Iterations must be independent;
// each index is evaluated by exactly one worker, so results do not depend on
// the worker count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace ckn
