#pragma once

#include <functional>

namespace nclab {

// Worker cap: NC_LAB_THREADS when set to a positive integer, else the hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n). Indices are split into contiguous chunks, so
// callers that write per-index results and reduce afterwards stay deterministic.
void parallel_for(int n, const std::function<void(int)>& body, int workers = worker_count());

}  // namespace nclab
