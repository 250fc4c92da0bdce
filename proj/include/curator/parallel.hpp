#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace curator {

/// Runs fn(i) for i in [0, n) on at most `max_in_flight` threads. Results
/// should be written by index so the outcome does not depend on scheduling.
/// If any call throws, the exception from the lowest failing index is
/// rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t max_in_flight, Fn&& fn) {
    const std::size_t workers = std::min(n, std::max<std::size_t>(max_in_flight, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;
    auto run = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace curator
