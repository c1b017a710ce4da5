#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace pos {

// Worker count: POS_THREADS if set and positive, otherwise hardware concurrency.
std::size_t default_threads();

// Runs fn(begin, end) over contiguous slices of [0, n). Results must not
// depend on the slicing; callers derive per-item random streams. The first
// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t threads = 0);

}  // namespace pos
