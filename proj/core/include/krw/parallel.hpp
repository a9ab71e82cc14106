#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace krw {

// Worker count used by the Monte Carlo drivers; 0 selects hardware concurrency.
void set_worker_threads(unsigned n);
unsigned worker_threads();

// Runs fn(i) for i in [0, count) on up to worker_threads() threads. Work is
// split into fixed indices, so results stored per index do not depend on the
// thread count. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace krw
