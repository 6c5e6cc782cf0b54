#pragma once

// Thin FFTW wrapper for the 2-D real-to-real transforms used by the field
// samplers. Plans are created once per (n, kind) under a lock; execution is
// thread-safe through the new-array interface.

#include <fftw3.h>

#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lqg::spectral {

enum class Kind {
    sine_synthesis,    // RODFT01: sum_j w_j X_j sin(pi j (i + 1/2) / n), j = 1..n
    sine_analysis,     // RODFT10
    cosine_synthesis,  // REDFT01: sum_j w_j X_j cos(pi j (i + 1/2) / n), j = 0..n-1
    cosine_analysis,   // REDFT10
};

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int n, Kind kind) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, kind);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<double> scratch(static_cast<std::size_t>(n) * n);
        // ESTIMATE keeps the chosen algorithm, hence the roundoff, identical
        // from run to run.
        fftw_plan p = fftw_plan_r2r_2d(n, n, scratch.data(), scratch.data(), r2r_kind(kind), r2r_kind(kind),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("FFTW plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    static fftw_r2r_kind r2r_kind(Kind k) {
        switch (k) {
            case Kind::sine_synthesis: return FFTW_RODFT01;
            case Kind::sine_analysis: return FFTW_RODFT10;
            case Kind::cosine_synthesis: return FFTW_REDFT01;
            case Kind::cosine_analysis: return FFTW_REDFT10;
        }
        return FFTW_RODFT01;
    }

    std::mutex mutex_;
    std::map<std::pair<int, Kind>, fftw_plan> plans_;
};

/// In-place 2-D transform of an n*n row-major array.
inline void transform(std::span<double> data, int n, Kind kind) {
    if (data.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("spectral::transform: size mismatch");
    fftw_execute_r2r(PlanCache::instance().get(n, kind), data.data(), data.data());
}

}  // namespace lqg::spectral
