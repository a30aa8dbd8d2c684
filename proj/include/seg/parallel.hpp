#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace seg {

// Process-wide worker count for parallel_for. Defaults to 1 so results are
// reproducible out of the box; the CLI raises it from the SEG_THREADS
// environment variable. parallel_for is only used for pure per-cell maps
// (no floating-point reductions), so results are bitwise identical for any
// thread count.
inline std::atomic<int>& thread_count_ref() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_thread_count(int n) { thread_count_ref().store(n < 1 ? 1 : n); }
inline int thread_count() { return thread_count_ref().load(); }

// Calls fn(begin, end) on disjoint ranges covering [0, n). fn must only write
// to cells in its own range.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = thread_count();
    if (workers <= 1 || n < 4096) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = std::min(n, w * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace seg
