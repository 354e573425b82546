#pragma once

#include <functional>

namespace fumo {

// Runs body(0..count-1) on up to `jobs` threads. After the first exception
// no new indices are started; that exception is rethrown once all workers
// have stopped.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

}  // namespace fumo
