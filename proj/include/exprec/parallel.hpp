#pragma once

#include <cstddef>
#include <functional>

namespace exprec {

/// Worker count used by parallel_for; defaults to EXPREC_THREADS or 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) split into contiguous chunks. Bodies must only
/// write to index-owned outputs, which keeps results independent of the
/// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace exprec
