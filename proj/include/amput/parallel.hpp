#pragma once

#include <cstddef>
#include <functional>

namespace amput {

// Worker count: AMPUT_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int thread_count();

// Calls task(i) for i in [0, count) on up to `threads` workers. Tasks must
// write only to their own slot; results are then independent of scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

}  // namespace amput
