#pragma once

#include <cstddef>
#include <functional>

namespace bec {

/// Runs fn(0..n−1) on up to `threads` workers. Each index is handled exactly
/// once and callers store results by index, so output does not depend on the
/// thread count. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace bec
