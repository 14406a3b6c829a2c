#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gmssl {

// Global cap for parallel_for workers (CLI --threads). 0 = hardware default.
void set_thread_cap(int t);
int thread_cap();

// Runs fn(i) for i in [0, n). Work items must write to disjoint locations;
// results are then independent of the schedule, keeping runs deterministic
// for any thread count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace gmssl
