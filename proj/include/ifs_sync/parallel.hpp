#pragma once

#include <cstddef>
#include <functional>

namespace ifs_sync {

//! Worker cap for parallel_for. Zero restores the default (hardware threads).
void set_worker_count(std::size_t n);
std::size_t worker_count();

/*!
 * Run task(i) for i in [0, n) on up to worker_count() threads.
 *
 * Tasks must write only to their own output slot; results are then
 * independent of the thread count. The first exception thrown by any task
 * is rethrown on the calling thread.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

} // namespace ifs_sync
