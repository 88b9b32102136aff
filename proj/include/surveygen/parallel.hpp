#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace surveygen {

/// Runs fn(i) for every i in [0, n) on up to max_threads workers and returns
/// one exception_ptr per index (null on success). Results land wherever fn
/// writes them, so output order is index order regardless of scheduling. The
/// gateway's semaphore governs actual provider concurrency.
template <typename Fn>
std::vector<std::exception_ptr> run_parallel(std::size_t n, Fn&& fn,
                                             std::size_t max_threads = 32) {
    std::vector<std::exception_ptr> errors(n);
    if (n == 0) return errors;
    const std::size_t workers = n < max_threads ? n : max_threads;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        return errors;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    return errors;
}

} // namespace surveygen
