#pragma once

#include <cstddef>
#include <functional>

namespace secfield {

/// Caps the number of worker threads used by internal loops (kernel
/// assembly, tensor contractions, orbit batches). 0 means "hardware
/// concurrency". The default is 1.
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Runs body(i) for i in [0, count). Work is split into contiguous chunks, so
/// every index is processed by exactly one thread and results written per
/// index are independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace secfield
