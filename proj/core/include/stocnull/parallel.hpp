#pragma once

#include <cstddef>
#include <functional>

namespace stocnull {

// Process-wide worker count used by the level-synchronous sweeps.
void set_thread_count(unsigned threads);
unsigned thread_count() noexcept;

// Runs body(i) for i in [0, count), split into contiguous chunks across the
// configured workers. Each index must write only to its own outputs; the
// results are then independent of the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& chunk_body);

}  // namespace stocnull
