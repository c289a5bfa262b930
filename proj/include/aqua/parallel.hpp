#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "aqua/error.hpp"

namespace aqua {

// Worker count: AQUA_THREADS when set, else the hardware count, at least 1.
inline int default_thread_count() {
    if (const char* env = std::getenv("AQUA_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        require(end != env && *end == '\0' && v >= 1 && v <= 4096, ErrorCategory::validation,
                std::string("AQUA_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Indices partition
// into contiguous blocks, so writes keyed by index land identically to the
// serial run; the first worker exception is rethrown after all join.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    require(threads >= 1, ErrorCategory::validation, "parallel_for: thread count must be positive");
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace aqua
