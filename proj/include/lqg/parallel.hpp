#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lqg {

/// Worker count: LQG_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("LQG_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n_jobs) on `workers` threads. Jobs must write
/// only to their own result slot; callers reduce the slots in index order,
/// which keeps every reduction independent of scheduling.
template <class Job>
void parallel_for(std::size_t n_jobs, Job&& job, unsigned workers = worker_count()) {
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n_jobs, 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_jobs) return;
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(n_jobs);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace lqg
