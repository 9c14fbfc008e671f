#pragma once

#include <cstdint>
#include <functional>

namespace depolar {

/// Number of worker threads to actually use for `requested` (0 means "all
/// hardware threads").
int resolve_threads(int requested);

/// Runs fn over [begin, end) split into contiguous chunks, one per worker.
/// Workers write to disjoint slots, so results do not depend on the thread
/// count. With one worker the call runs inline. Exceptions from workers are
/// rethrown on the calling thread (lowest chunk first).
void parallel_for(std::int64_t begin, std::int64_t end, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace depolar
