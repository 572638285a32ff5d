#pragma once

#include <cstddef>
#include <functional>

namespace raln {

/// Worker count: RALN_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_budget();

/// Runs body(i) for i in [0, count). Each index runs exactly once; callers must
/// write results into per-index slots so the outcome is schedule independent.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace raln
