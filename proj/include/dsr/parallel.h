#pragma once

#include <tbb/parallel_for.h>

namespace dsr {

// Caps worker threads process-wide. n <= 0 restores the hardware default.
void set_max_threads(int n);

// Applies DSR_THREADS from the environment when set.
void configure_threads_from_env();

template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  tbb::parallel_for(0, count, [&](int i) { fn(i); });
}

}  // namespace dsr
