#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace sfgrass {

namespace detail {
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{1};
    return cap;
}
} // namespace detail

/// Cap on worker threads used by the embarrassingly parallel kernels
/// (column smoothing, edge scoring). Defaults to 1.
inline void set_max_threads(int n) { detail::thread_cap().store(n < 1 ? 1 : n); }
inline int max_threads() { return detail::thread_cap().load(); }

namespace detail {

/// Static-chunked parallel loop over [0, count). Each index is visited by
/// exactly one worker and results must be written to disjoint slots, so the
/// output is identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const int want = max_threads();
    if (want <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(want), count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([t, workers, count, &fn] {
            for (std::size_t i = t; i < count; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail
} // namespace sfgrass
