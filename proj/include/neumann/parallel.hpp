#pragma once

// Deterministic parallel loop: each index writes only its own slot, so
// results do not depend on the thread count. NEUMANN_THREADS overrides the
// number of worker threads.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace neumann {

inline unsigned worker_count()
{
    if (const char* env = std::getenv("NEUMANN_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return unsigned(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class F>
void parallel_for(std::size_t count, F&& body)
{
    const unsigned threads = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
    if (threads <= 1 || count < 64) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mtx;
    auto worker = [&] {
        constexpr std::size_t chunk = 16;
        for (;;) {
            const std::size_t start = next.fetch_add(chunk);
            if (start >= count) return;
            const std::size_t stop = std::min(count, start + chunk);
            try {
                for (std::size_t i = start; i < stop; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mtx);
                if (!error) error = std::current_exception();
                next = count;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace neumann
