#pragma once

#include <cstddef>
#include <functional>

namespace hoipc {

/// Worker count used by parallel_for; 0 selects the hardware concurrency.
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n) over contiguous chunks. Callers write per-index results and
/// reduce them afterwards in index order, so output does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hoipc
