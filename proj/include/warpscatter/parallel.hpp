#pragma once

#include <cstddef>
#include <functional>

namespace ws::par {

// Worker cap: WARPSCATTER_THREADS if set, else the OpenMP default.
int max_threads();

// Runs fn(i) for i in [0, n).  OpenMP-backed when available.  Work items must
// be independent; exceptions are captured and rethrown after the loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Serial reference path, kept for testing and benchmarking against the
// parallel one.  Identical iteration order and arithmetic.
void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ws::par
