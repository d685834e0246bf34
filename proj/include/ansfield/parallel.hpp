#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ansfield {

/// Worker cap: ANSFIELD_THREADS when set (>=1), else hardware concurrency.
inline int worker_count() {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("ANSFIELD_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) return std::min(cap, hw);
        } catch (...) {
        }
    }
    return hw;
}

/// Calls fn(i) for i in [0, n). Each index is handled exactly once; callers write
/// results into per-index slots so output does not depend on scheduling.
template <typename Fn>
void parallel_for(int n, Fn&& fn, int workers = worker_count()) {
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ansfield
