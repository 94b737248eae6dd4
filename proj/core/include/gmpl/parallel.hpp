#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gmpl {

/// Thread count from GMPL_THREADS, else the available hardware parallelism.
unsigned default_threads();

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Work is handed
/// out in chunks; callers write results by index, so the outcome never
/// depends on scheduling. The first exception thrown by fn is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn, std::size_t chunk = 64) {
    if (threads == 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(threads, (count + chunk - 1) / chunk);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        try {
            for (;;) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= count) return;
                const std::size_t end = std::min(count, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) fn(i);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(count);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gmpl
