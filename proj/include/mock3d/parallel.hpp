#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mock3d {

inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) over `threads` workers using static
/// contiguous chunks. Each index is processed exactly once, so results that
/// depend only on i are independent of the thread count.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    if (count <= 0) return;
    const int workers = std::min(resolve_thread_count(threads), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const int begin = static_cast<int>(static_cast<long long>(count) * w / workers);
            const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
            pool.emplace_back([&, begin, end] {
                try {
                    for (int i = begin; i < end; ++i) fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace mock3d
