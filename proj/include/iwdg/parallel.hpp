#pragma once

#include <cstddef>
#include <functional>

namespace iwdg {

// Process-wide worker count used when a call does not specify one.
// 0 means std::thread::hardware_concurrency().
void set_default_workers(unsigned workers);
unsigned default_workers();
unsigned resolve_workers(unsigned requested);

// Runs task(i) for i in [0, count) on up to `workers` threads. Tasks are
// claimed dynamically; callers that need deterministic output must write
// per-task results and reduce them in index order.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task);

}  // namespace iwdg
