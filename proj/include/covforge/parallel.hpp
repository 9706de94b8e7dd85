#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace covforge {

// Worker count for data-parallel sweeps: hardware concurrency, capped by the
// COVFORGE_THREADS environment variable when it holds a positive integer.
inline std::size_t worker_count()
{
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("COVFORGE_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
        } catch (...) {
            // unparsable value: keep the hardware default
        }
    }
    return n;
}

// Calls fn(begin, end, worker) on disjoint contiguous chunks of [0, n).
// Runs inline when one worker suffices.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 256)
{
    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(1, n / min_chunk));
    if (workers <= 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    }
    for (auto& t : pool) t.join();
}

} // namespace covforge
