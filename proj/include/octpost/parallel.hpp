#pragma once

#include <cstddef>
#include <functional>

namespace octpost {

// Global worker count for frame-level parallelism. 0 = hardware concurrency.
// Set once at process start (CLI --threads); results never depend on it
// because every task writes only its own index slot.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Tasks must be independent. The first exception
// thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace octpost
