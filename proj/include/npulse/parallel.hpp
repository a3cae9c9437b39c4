#pragma once

#include <cstddef>
#include <functional>

namespace npulse {

/// Worker count used by parallel_for. Defaults to PULSE_THREADS, else the
/// hardware concurrency.
int thread_count();
/// n <= 0 restores the default.
void set_thread_count(int n);

/// Calls body(i) for i in [0, n) on up to thread_count() threads. Each index
/// runs exactly once; callers store results by index, so output never
/// depends on the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace npulse
