#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qgbsde {

/// Fixed block size for path-parallel work. Reductions sum per-block partials in
/// block order, so results never depend on the worker count.
inline constexpr std::size_t kPathBlock = 4096;

inline std::size_t block_count(std::size_t n) { return (n + kPathBlock - 1) / kPathBlock; }

/// Runs fn(block, begin, end) over the fixed path blocks of [0, n). Blocks are
/// dealt round-robin to at most `workers` threads; the first exception is rethrown.
template <class Fn>
void for_each_block(std::size_t n, unsigned workers, Fn&& fn) {
    const std::size_t blocks = block_count(n);
    auto run = [&](std::size_t b) {
        const std::size_t begin = b * kPathBlock;
        fn(b, begin, std::min(n, begin + kPathBlock));
    };
    const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), blocks);
    if (threads <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) run(b);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < blocks; b += threads) run(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace qgbsde
