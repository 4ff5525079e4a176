#pragma once

#include <cstddef>
#include <functional>

namespace bnar {

/// Worker threads for embarrassingly parallel loops: the BNAR_WORKERS
/// environment variable when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Calls fn(i) for i in [0, n) on up to worker_count() threads. Results must
/// not depend on scheduling; the first exception by index is rethrown after
/// all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bnar
