#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace krlab::harness {

// Runs f(0..n-1) across `workers` threads. Each index is claimed exactly
// once; callers keep determinism by writing only to their own output slot.
// The first exception wins and is rethrown on the calling thread.
template <class F>
void parallel_for(size_t n, uint32_t workers, F&& f) {
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    size_t n_threads = std::min<size_t>(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace krlab::harness
