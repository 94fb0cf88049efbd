#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lcap {

/// Worker count from LCAP_WORKERS, else the hardware concurrency.
inline unsigned default_workers() {
    if (const char* env = std::getenv("LCAP_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(k) for k in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; the first exception is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        fn(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace lcap
