#pragma once

#include <cstddef>
#include <functional>

namespace riskstab {

// Worker count: RISKSTAB_THREADS if set (clamped to [1, 64]), otherwise the
// hardware concurrency. Read per call so tests can flip the variable.
std::size_t worker_count();

// Runs fn(i) for i in [0, n) across worker_count() threads on contiguous
// blocks. Each index must write only its own output slot; with that rule the
// result is independent of the schedule, which keeps parallel runs
// byte-identical to serial ones. Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace riskstab
