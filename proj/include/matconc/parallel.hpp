#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace matconc {

/// Calls f(i) for i in [0, count) on up to `threads` workers. Work is split
/// into contiguous chunks; f must only touch state owned by index i. The
/// first exception (lowest chunk) is rethrown after all workers join.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            f(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = w * count / workers;
            const std::size_t hi = (w + 1) * count / workers;
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    f(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace matconc
