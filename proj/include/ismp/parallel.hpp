#pragma once

#include <cstddef>
#include <functional>

namespace ismp {

// Process-wide worker count used by parallel_for. 0 selects
// std::thread::hardware_concurrency(). The CLI maps --threads here.
void set_thread_count(unsigned n);
unsigned thread_count();

// Covers [0, n) with contiguous chunks and calls fn(begin, end) once per
// chunk. Each index must write only its own output slot; under that contract
// the result is byte-identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace ismp
