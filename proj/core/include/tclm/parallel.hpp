#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tclm {

/// Runs fn(i) for i in [0, n) on up to `workers` threads, in contiguous
/// chunks. The first exception thrown by any task is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
    const std::size_t threads =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    const std::size_t end = std::min(n, (w + 1) * chunk);
                    for (std::size_t i = w * chunk; i < end; ++i) {
                        fn(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace tclm
