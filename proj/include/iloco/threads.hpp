#pragma once

#include <cstddef>
#include <functional>

namespace iloco::threads {

// Worker cap used by every parallel loop in the library.
// Resolution order: set_max() > ILOCO_THREADS env var > hardware concurrency.
int max_threads();
void set_max(int n);

// Runs fn(i) for i in [0, n) on up to max_threads() workers using a static
// block partition. Results must be written to pre-assigned slots; outputs are
// then identical for any thread count. The first exception thrown by a worker
// is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace iloco::threads
