#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace cnnaa {

/// Runs fn(begin, end) over [0, n) split across at most `jobs` threads.
/// Deterministic as long as chunks write disjoint state.
inline void parallel_chunks(std::size_t n, std::size_t jobs,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (jobs <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    jobs = std::min(jobs, n);
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (std::size_t t = 0; t < jobs; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back(fn, begin, end);
    }
    for (std::thread& th : threads) th.join();
}

}  // namespace cnnaa
