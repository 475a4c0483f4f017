#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace sdeblur {

inline std::atomic<int>& thread_count_storage() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_threads(int n) { thread_count_storage() = n < 1 ? 1 : n; }
inline int threads() { return thread_count_storage().load(); }

// Runs fn(y0, y1) over contiguous row ranges. Every row is processed by
// exactly one worker and rows never share output cells, so results are
// bit-identical for any thread count.
template <typename Fn>
void parallel_rows(int height, Fn&& fn) {
    int n = threads();
    if (n <= 1 || height < 2 * n) {
        fn(0, height);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n);
    int chunk = (height + n - 1) / n;
    for (int t = 0; t < n; ++t) {
        int y0 = t * chunk;
        int y1 = y0 + chunk < height ? y0 + chunk : height;
        if (y0 >= y1) break;
        pool.emplace_back([&fn, y0, y1] { fn(y0, y1); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace sdeblur
