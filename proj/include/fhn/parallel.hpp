#pragma once

#include <atomic>
#include <functional>
#include <thread>

namespace fhn::detail {

/// Index-sharded parallel loop; results must be written to index-addressed
/// slots so the outcome is independent of scheduling.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int workers = std::max(1, std::min(hw, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace fhn::detail
