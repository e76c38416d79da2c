#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace matchbcp {

// Worker count: MATCHBCP_WORKERS env var wins, otherwise hardware threads.
inline int worker_count(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MATCHBCP_WORKERS"); env && *env) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(task_index, worker_index) for task_index in [0, n_tasks). Task
// decomposition is independent of the worker count, so callers that reduce
// per-task results in task order stay deterministic.
inline void parallel_tasks(int n_tasks, int workers,
                           const std::function<void(int, int)>& fn) {
    workers = std::min(workers, n_tasks);
    if (workers <= 1) {
        for (int t = 0; t < n_tasks; ++t) fn(t, 0);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= n_tasks) return;
                try {
                    fn(t, w);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace matchbcp
