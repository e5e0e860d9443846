#pragma once

#include <functional>

namespace madm {

/// Number of worker threads implied by a requested count: n <= 0 means
/// hardware concurrency (env MADM_THREADS, when set, overrides that default).
int resolve_threads(int requested);

/// Runs fn(i) for i in [0,n) on up to `threads` workers.  Exceptions are
/// captured and the first one rethrown after all workers join.
void parallel_for(long n, int threads, const std::function<void(long)>& fn);

}  // namespace madm
