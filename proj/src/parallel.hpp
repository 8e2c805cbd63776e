// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uwmmse::detail {

/// Worker cap from UNFOLD_WMMSE_THREADS, else the OpenMP default.
inline int worker_count() {
  if (const char* env = std::getenv("UNFOLD_WMMSE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n >= 1) return static_cast<int>(n);
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs body(i) for i in [0, n). Results must be written to per-index slots;
/// the first exception thrown by any worker is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Splits [0, n) into contiguous ranges, one per worker, and runs
/// body(begin, end) on each. Lets a worker reuse scratch space across indices.
template <class Body>
void parallel_ranges(std::size_t n, Body&& body) {
  const std::size_t workers = static_cast<std::size_t>(worker_count());
  const std::size_t chunks = std::max<std::size_t>(1, std::min(workers, n));
  parallel_for(chunks, [&](std::size_t c) {
    body(c * n / chunks, (c + 1) * n / chunks);
  });
}

}  // namespace uwmmse::detail
