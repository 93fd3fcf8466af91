#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ldm {

/// Run fn(worker, i) for i in [0, n) on `width` threads; `worker` is a stable
/// id in [0, width) for per-worker scratch. Work is handed out in dynamic
/// chunks but every result must go to a slot preassigned by i, so outputs do
/// not depend on scheduling or thread count. The first exception thrown by
/// any worker is rethrown on the caller.
template <class Fn>
void parallel_for_workers(std::size_t n, int width, Fn&& fn) {
    if (n == 0) return;
    if (width <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(0, i);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(width) * 8));
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr error;

    auto worker = [&](int id) {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            std::size_t end = std::min(n, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) fn(id, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(width) - 1);
    for (int t = 1; t < width; ++t) threads.emplace_back(worker, t);
    worker(0);
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

template <class Fn>
void parallel_for(std::size_t n, int width, Fn&& fn) {
    parallel_for_workers(n, width, [&](int, std::size_t i) { fn(i); });
}

} // namespace ldm
