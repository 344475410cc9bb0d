#pragma once

#include <cstddef>
#include <functional>

namespace resfno {

/// Worker count: RESFNO_THREADS when set and positive, else hardware concurrency.
std::size_t thread_count();

/// Calls fn(i) for i in [0, n) over up to thread_count() threads; the first exception is rethrown.
/// Callers must make iterations independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace resfno
