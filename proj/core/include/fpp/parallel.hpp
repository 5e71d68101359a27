#pragma once
#include <cstddef>
#include <functional>

namespace fpp {

// worker count: FPP_THREADS if set (>=1), else hardware concurrency
int thread_count();

// run body(i) for i in [0, n); results must be written to index-addressed
// storage by the caller so ordering is independent of scheduling
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fpp
