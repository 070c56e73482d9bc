#pragma once

#include <cstddef>
#include <functional>

namespace rieszdml {

/// Worker cap: RIESZ_DML_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Calls body(i) for i in [0, count) on up to `threads` workers. Each index
/// is processed exactly once. If any call throws, the exception from the
/// smallest failing index is rethrown after all workers have joined.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace rieszdml
