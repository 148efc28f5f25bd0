#pragma once

#include <functional>

namespace ebshrink {

// Thread count resolution: explicit request > EBSHRINK_THREADS > hardware.
int resolve_threads(int requested);

// Runs fn(0..count-1) across `threads` workers pulling indices from a shared
// counter. Each index must write only to its own output slot; with that
// discipline results are identical for any thread count. The first exception
// thrown by a worker is rethrown on the calling thread.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace ebshrink
