#pragma once

#include <cstddef>
#include <functional>

namespace spdddpm {

/// Number of worker threads: SPDDDPM_THREADS if set and positive, otherwise
/// the hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n).  Work is split into contiguous ranges across
/// threads; each index must only touch its own output slot so results do not
/// depend on the thread count.  Exceptions thrown by fn are rethrown in the
/// calling thread (the first one by index order).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace spdddpm
