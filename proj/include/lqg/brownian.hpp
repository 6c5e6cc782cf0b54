#pragma once

// First passage of S_t = -B_t + a t to a level A > 0 (the radius of a quantum
// ball in log scale), the exponential-martingale identity
//   E[exp(-2x T_A) 1{T_A < inf}] = exp(-beta(x) A),
// and the inverse-Gaussian density of T_A.
//
// The walk is the Euler chain S_{k+1} = S_k + a dt - N(0, dt) with the
// Brownian-bridge crossing test between grid points. The grid path is
// generated block-wise: a block endpoint is drawn first and the interior is
// filled in by Levy midpoint refinement only where the bridge could reach A.
// This reproduces the law of the step-by-step chain while touching only the
// steps near the barrier.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "lqg/kpz.hpp"
#include "lqg/parallel.hpp"
#include "lqg/random.hpp"
#include "lqg/stats.hpp"

namespace lqg {

enum class PassageStatus { hit, capped, escaped };

inline const char* to_string(PassageStatus s) {
    switch (s) {
        case PassageStatus::hit: return "hit";
        case PassageStatus::capped: return "capped";
        case PassageStatus::escaped: return "escaped";
    }
    return "?";
}

struct StoppingTimeSample {
    double A = 0.0;
    double a = 0.0;
    double dt = 0.0;
    double t_max = 0.0;
    double T = std::numeric_limits<double>::infinity();
    bool hit = false;
    PassageStatus status = PassageStatus::capped;
    double level_at_hit = 0.0;  // walk value at the end of the crossing step (>= A)
};

struct PassageOptions {
    bool bridge_correction = true;
    /// log2 of the block length in steps; 0 runs the plain step-by-step chain.
    int block_log2 = 10;
    /// Blocks (and the a < 0 tail) are skipped when the chance of crossing is
    /// below this.
    double negligible = 1e-14;
    /// Negate every increment (the antithetic partner of a path).
    bool antithetic = false;
};

/// Default cap: 1e4 max(1, A/|a|) for a > 0, 1e3 A otherwise.
inline double default_t_max(double A, double a) {
    return a > 0.0 ? 1e4 * std::max(1.0, A / std::abs(a)) : 1e3 * A;
}

namespace detail {

class PassageWalker {
public:
    PassageWalker(double A, double dt, const PassageOptions& opt, NormalStream& normal)
        : A_(A), dt_(dt), opt_(opt), normal_(normal) {}

    double gaussian() { return opt_.antithetic ? -normal_() : normal_(); }

    /// Searches steps [k0, k0 + m) given the walk at both ends. Returns the
    /// crossing time or a negative value.
    double search(std::int64_t k0, std::int64_t m, double s0, double s1, double& level) {
        if (m == 1) return leaf(k0, s0, s1, level);
        if (s1 < A_) {
            // Crossing probability of the continuous bridge bounds the chain's.
            const double p = std::exp(-2.0 * (A_ - s0) * (A_ - s1) / (static_cast<double>(m) * dt_));
            if (p < opt_.negligible) return -1.0;
        }
        const std::int64_t half = m / 2;
        const double frac = static_cast<double>(half) / static_cast<double>(m);
        const double span = static_cast<double>(m) * dt_;
        const double mid = s0 + frac * (s1 - s0) + std::sqrt(span * frac * (1.0 - frac)) * gaussian();
        const double t = search(k0, half, s0, mid, level);
        if (t >= 0.0) return t;
        return search(k0 + half, m - half, mid, s1, level);
    }

private:
    double leaf(std::int64_t k, double s0, double s1, double& level) {
        const double t0 = static_cast<double>(k) * dt_;
        if (s1 >= A_) {
            level = s1;
            return t0 + dt_ * std::clamp((A_ - s0) / (s1 - s0), 0.0, 1.0);
        }
        if (opt_.bridge_correction) {
            const double p = std::exp(-2.0 * (A_ - s0) * (A_ - s1) / dt_);
            if (p > 1e-300 && normal_.uniform() < p) {
                level = A_;
                return t0 + 0.5 * dt_;
            }
        }
        return -1.0;
    }

    double A_, dt_;
    const PassageOptions& opt_;
    NormalStream& normal_;
};

}  // namespace detail

/// One first-passage time of -B_t + a t to level A. `normal` supplies the
/// path's private stream.
inline StoppingTimeSample simulate_stopping_time(const GammaParams& g, double A, double dt, double t_max,
                                                 NormalStream& normal, const PassageOptions& opt = {}) {
    if (!(A > 0.0) || !(dt > 0.0) || !(t_max > 0.0)) {
        throw std::invalid_argument("simulate_stopping_time: A, dt, t_max must be positive");
    }
    StoppingTimeSample s;
    s.A = A;
    s.a = g.a;
    s.dt = dt;
    s.t_max = t_max;
    const double a = g.a;
    const auto total_steps = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
    const std::int64_t block = std::int64_t{1} << std::clamp(opt.block_log2, 0, 30);
    detail::PassageWalker walker(A, dt, opt, normal);
    double level = 0.0;
    double pos = 0.0;
    for (std::int64_t k = 0; k < total_steps;) {
        const std::int64_t m = std::min(block, total_steps - k);
        const double span = static_cast<double>(m) * dt;
        const double next = pos + a * span - std::sqrt(span) * walker.gaussian();
        const double t = walker.search(k, m, pos, next, level);
        if (t >= 0.0) {
            s.T = t;
            s.hit = true;
            s.status = PassageStatus::hit;
            s.level_at_hit = level;
            return s;
        }
        pos = next;
        k += m;
        // Drift away from the barrier: the chance of ever returning is
        // exp(-2|a| (A - pos)).
        if (a < 0.0 && std::exp(-2.0 * std::abs(a) * (A - pos)) < opt.negligible) {
            s.status = PassageStatus::escaped;
            return s;
        }
    }
    s.status = PassageStatus::capped;
    return s;
}

/// Seeded variant: path `path_index` of the experiment rooted at `seed`.
inline StoppingTimeSample simulate_stopping_time(const GammaParams& g, double A, double dt, double t_max,
                                                 std::uint64_t seed, std::uint64_t path_index,
                                                 const PassageOptions& opt = {}) {
    NormalStream normal(seed, path_index);
    return simulate_stopping_time(g, A, dt, t_max, normal, opt);
}

struct PathEnsembleOptions {
    double dt = 1e-4;
    double t_max = 0.0;  // 0 selects default_t_max
    std::uint64_t seed = 1;
    PassageOptions passage{};
    unsigned workers = 0;  // 0 selects worker_count()
};

/// n_paths independent stopping times; with antithetic on, odd paths reuse the
/// stream of the preceding even path with negated increments.
inline std::vector<StoppingTimeSample> simulate_paths(const GammaParams& g, double A, std::size_t n_paths,
                                                      const PathEnsembleOptions& opt) {
    const double t_max = opt.t_max > 0.0 ? opt.t_max : default_t_max(A, g.a);
    std::vector<StoppingTimeSample> out(n_paths);
    const std::size_t chunk = 4096;
    const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
    parallel_for(
        n_chunks,
        [&](std::size_t c) {
            for (std::size_t i = c * chunk; i < std::min(n_paths, (c + 1) * chunk); ++i) {
                PassageOptions po = opt.passage;
                std::uint64_t stream = i;
                if (po.antithetic) {
                    stream = i & ~std::uint64_t{1};
                    po.antithetic = (i & 1) != 0;
                }
                out[i] = simulate_stopping_time(g, A, opt.dt, t_max, opt.seed, stream, po);
            }
        },
        opt.workers ? opt.workers : worker_count());
    return out;
}

struct MartingaleEstimate {
    double x = 0.0;
    double A = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double closed_form = 0.0;
    double hit_rate = 0.0;
    double hit_rate_stderr = 0.0;

    double z_score() const { return std_error > 0.0 ? (value - closed_form) / std_error : 0.0; }
};

/// Mean of exp(-2x T) 1{hit} over the given paths, one estimate per x. When
/// the paths are antithetic pairs the standard error is computed over pair
/// means.
inline std::vector<MartingaleEstimate> martingale_estimates(const GammaParams& g, std::span<const double> xs, double A,
                                                            std::span<const StoppingTimeSample> paths,
                                                            bool antithetic_pairs = false) {
    std::vector<MartingaleEstimate> out;
    const std::size_t n = paths.size();
    const std::size_t group = antithetic_pairs ? 2 : 1;
    const std::size_t n_groups = n / group;
    if (n_groups < 2) throw std::invalid_argument("martingale_estimates: need at least two paths");
    std::vector<double> values(n_groups);
    std::vector<double> hits(n_groups);
    for (double x : xs) {
        if (!(x >= 0.0)) throw std::invalid_argument("martingale_estimates: x must be nonnegative");
        for (std::size_t k = 0; k < n_groups; ++k) {
            double v = 0.0, h = 0.0;
            for (std::size_t j = 0; j < group; ++j) {
                const auto& p = paths[k * group + j];
                if (p.hit) {
                    v += std::exp(-2.0 * x * p.T);
                    h += 1.0;
                }
            }
            values[k] = v / static_cast<double>(group);
            hits[k] = h / static_cast<double>(group);
        }
        const auto mv = stats::moments(values);
        const auto mh = stats::moments(hits);
        MartingaleEstimate e;
        e.x = x;
        e.A = A;
        e.value = mv.mean;
        e.std_error = mv.stderr_mean();
        e.n_paths = n_groups * group;
        e.closed_form = std::exp(-kpz_beta(g, x) * A);
        e.hit_rate = mh.mean;
        e.hit_rate_stderr = mh.stderr_mean();
        out.push_back(e);
    }
    return out;
}

inline MartingaleEstimate martingale_estimate(const GammaParams& g, double x, double A, std::size_t n_paths,
                                              const PathEnsembleOptions& opt) {
    const auto paths = simulate_paths(g, A, n_paths, opt);
    const double xs[] = {x};
    return martingale_estimates(g, xs, A, paths, opt.passage.antithetic).front();
}

/// Ratio value / hit_rate with a delta-method standard error (the two means
/// come from the same paths).
struct ConditionalEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline ConditionalEstimate conditional_on_hit(const GammaParams& /*g*/, double x,
                                              std::span<const StoppingTimeSample> paths) {
    double sv = 0.0, sh = 0.0;
    const double n = static_cast<double>(paths.size());
    for (const auto& p : paths) {
        if (!p.hit) continue;
        sv += std::exp(-2.0 * x * p.T);
        sh += 1.0;
    }
    if (sh == 0.0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()};
    const double mv = sv / n, mh = sh / n;
    const double r = mv / mh;
    double var = 0.0;
    for (const auto& p : paths) {
        const double v = p.hit ? std::exp(-2.0 * x * p.T) : 0.0;
        const double h = p.hit ? 1.0 : 0.0;
        const double d = (v - r * h) / mh;
        var += d * d;
    }
    return {r, std::sqrt(var / (n * (n - 1.0)))};
}

// ---------------------------------------------------------------------------
// Inverse-Gaussian law of T_A
// ---------------------------------------------------------------------------

/// P_A(t) = A / sqrt(2 pi t^3) exp(-(A - a t)^2 / (2t)).
inline double inverse_gaussian_pdf(double A, double a, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("inverse_gaussian_pdf: t must be positive");
    if (!(A > 0.0)) throw std::invalid_argument("inverse_gaussian_pdf: A must be positive");
    const double d = A - a * t;
    return A / std::sqrt(2.0 * std::numbers::pi * t * t * t) * std::exp(-d * d / (2.0 * t));
}

/// P(T_A <= t) by adaptive Gauss-Kronrod quadrature of the density.
inline double first_passage_cdf(double A, double a, double t) {
    if (!(t > 0.0)) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double s) { return s > 0.0 ? inverse_gaussian_pdf(A, a, s) : 0.0; };
    // The density is negligible below a small fraction of A^2; split there so
    // the adaptive rule sees the peak.
    const double mode_scale = std::min(t, A * A / 3.0);
    double v = gauss_kronrod<double, 61>::integrate(f, 0.0, mode_scale, 12, 1e-13);
    if (t > mode_scale) v += gauss_kronrod<double, 61>::integrate(f, mode_scale, t, 12, 1e-13);
    return v;
}

/// P(T_A < inf) = min(1, e^{2aA}).
inline double hit_probability(double A, double a) { return a >= 0.0 ? 1.0 : std::exp(2.0 * a * A); }

/// Laplace transform of P_A at 2x by quadrature: should equal exp(-beta(x) A).
inline double laplace_transform_quadrature(double A, double a, double x) {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double s) { return s > 0.0 ? std::exp(-2.0 * x * s) * inverse_gaussian_pdf(A, a, s) : 0.0; };
    const double split = A * A / 3.0;
    return gauss_kronrod<double, 61>::integrate(f, 0.0, split, 12, 1e-13) +
           gauss_kronrod<double, 61>::integrate(f, split, std::numeric_limits<double>::infinity(), 12, 1e-13);
}

struct DensityFit {
    std::size_t n_hits = 0;
    double ks = 0.0;
    /// A / (weighted mean of T) under weights exp(-2x T); tends to a + gamma Delta.
    double concentration = 0.0;
    double mean_ratio = 0.0;  // unweighted mean of A / T
};

inline DensityFit density_fit(std::span<const StoppingTimeSample> samples, double x = 0.0,
                              std::size_t min_hits = 10000) {
    if (samples.empty()) throw std::invalid_argument("density_fit: no samples");
    const double A = samples.front().A;
    const double a = samples.front().a;
    std::vector<double> times;
    double wsum = 0.0, wt = 0.0, ratio = 0.0;
    for (const auto& s : samples) {
        if (!s.hit) continue;
        times.push_back(s.T);
        const double w = std::exp(-2.0 * x * s.T);
        wsum += w;
        wt += w * s.T;
        ratio += A / s.T;
    }
    if (times.size() < min_hits) throw std::invalid_argument("density_fit: insufficient hit samples");
    DensityFit fit;
    fit.n_hits = times.size();
    const double norm = hit_probability(A, a);
    // Running CDF: one full quadrature, then short panels between order statistics.
    std::sort(times.begin(), times.end());
    using boost::math::quadrature::gauss_kronrod;
    auto pdf = [&](double t) { return inverse_gaussian_pdf(A, a, t); };
    double cdf = first_passage_cdf(A, a, times.front());
    const double n = static_cast<double>(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0 && times[i] > times[i - 1]) cdf += gauss_kronrod<double, 15>::integrate(pdf, times[i - 1], times[i], 0);
        const double f = cdf / norm;
        fit.ks = std::fmax(fit.ks, std::fmax(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
    }
    fit.concentration = A / (wt / wsum);
    fit.mean_ratio = ratio / static_cast<double>(times.size());
    return fit;
}

}  // namespace lqg
