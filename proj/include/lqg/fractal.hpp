#pragma once

// Fractal test sets on the grid and estimators of their Euclidean and quantum
// scaling exponents:
//   P{B_eps(z) meets X} ~ eps^{2x}        z uniform in D
//   P{quantum ball of mass delta at z meets X} ~ delta^{Delta}   (z, h) from the weighted measure

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lqg/gff.hpp"
#include "lqg/kpz.hpp"
#include "lqg/measure.hpp"
#include "lqg/parallel.hpp"
#include "lqg/random.hpp"
#include "lqg/stats.hpp"

namespace lqg {

enum class MaskKind { point, segment, cantor_dust, random_walk_range };

inline const char* to_string(MaskKind k) {
    switch (k) {
        case MaskKind::point: return "point";
        case MaskKind::segment: return "segment";
        case MaskKind::cantor_dust: return "cantor_dust";
        case MaskKind::random_walk_range: return "random_walk_range";
    }
    return "?";
}

inline MaskKind mask_kind_from_string(const std::string& s) {
    if (s == "point") return MaskKind::point;
    if (s == "segment") return MaskKind::segment;
    if (s == "cantor_dust") return MaskKind::cantor_dust;
    if (s == "random_walk_range") return MaskKind::random_walk_range;
    throw std::invalid_argument("unknown mask kind '" + s + "'");
}

struct FractalParams {
    int depth = 5;                    // cantor_dust
    std::size_t walk_steps = 20000;   // random_walk_range
    std::uint64_t seed = 1;           // random_walk_range
    double margin = 0.125;
};

/// Occupied cells of the grid; X is the set of their centres.
struct FractalMask {
    Grid grid;
    std::vector<std::size_t> cells;  // sorted cell indices
    MaskKind kind = MaskKind::point;
    std::optional<double> known_x;

    Point center(std::size_t c) const {
        return grid.center(static_cast<int>(c % grid.n), static_cast<int>(c / grid.n));
    }
};

namespace detail {

/// Membership of u in the depth-d middle-thirds Cantor set on [0, 1).
inline bool in_cantor(double u, int depth) {
    if (u < 0.0 || u >= 1.0) return false;
    for (int d = 0; d < depth; ++d) {
        const double v = 3.0 * u;
        const int digit = static_cast<int>(v);
        if (digit == 1) return false;
        u = v - digit;
    }
    return true;
}

}  // namespace detail

inline FractalMask make_fractal(MaskKind kind, const FractalParams& params, const Grid& grid) {
    FractalMask m;
    m.grid = grid;
    m.kind = kind;
    const int n = grid.n;
    switch (kind) {
        case MaskKind::point:
            m.cells.push_back(grid.index(n / 2, n / 2));
            m.known_x = 1.0;
            break;
        case MaskKind::segment:
            for (int i = n / 4; i < 3 * n / 4; ++i) m.cells.push_back(grid.index(i, n / 2));
            m.known_x = 0.5;
            break;
        case MaskKind::cantor_dust: {
            if (params.depth < 3) throw std::invalid_argument("cantor_dust: depth must be >= 3");
            const double lo = params.margin, side = 1.0 - 2.0 * params.margin;
            if (side / std::pow(3.0, params.depth) < grid.spacing) {
                throw std::invalid_argument("cantor_dust: depth " + std::to_string(params.depth) +
                                            " not resolvable on n=" + std::to_string(n));
            }
            std::vector<char> axis(n);
            for (int i = 0; i < n; ++i) axis[i] = detail::in_cantor((grid.center(i, 0).x - lo) / side, params.depth);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    if (axis[i] && axis[j]) m.cells.push_back(grid.index(i, j));
            m.known_x = 1.0 - std::log(2.0) / std::log(3.0);
            break;
        }
        case MaskKind::random_walk_range: {
            Philox4x32 rng(params.seed, 0);
            const int lo = static_cast<int>(std::ceil(params.margin * n - 0.5));
            const int hi = n - 1 - lo;
            int i = n / 2, j = n / 2;
            std::vector<char> seen(grid.size(), 0);
            seen[grid.index(i, j)] = 1;
            for (std::size_t s = 0; s < params.walk_steps; ++s) {
                const auto r = rng() & 3u;
                int di = r == 0 ? 1 : (r == 1 ? -1 : 0);
                int dj = r == 2 ? 1 : (r == 3 ? -1 : 0);
                if (i + di < lo || i + di > hi) di = -di;
                if (j + dj < lo || j + dj > hi) dj = -dj;
                i += di;
                j += dj;
                seen[grid.index(i, j)] = 1;
            }
            for (std::size_t c = 0; c < seen.size(); ++c)
                if (seen[c]) m.cells.push_back(c);
            break;
        }
    }
    for (std::size_t c : m.cells) {
        if (boundary_distance(m.center(c)) < params.margin - 1e-12) {
            throw std::invalid_argument(std::string("make_fractal: ") + to_string(kind) + " violates the boundary margin");
        }
    }
    if (m.cells.empty()) throw std::invalid_argument("make_fractal: empty mask");
    std::sort(m.cells.begin(), m.cells.end());
    return m;
}

/// Exact Euclidean feature transform of the mask (nearest occupied cell for
/// every cell), queried at continuous points through the 3x3 neighbourhood of
/// the containing cell. Exact at cell centres; elsewhere it never undershoots
/// and can overshoot by a small fraction of the spacing when the nearest
/// occupied cell is far away.
class MaskDistance {
public:
    explicit MaskDistance(const FractalMask& mask) : grid_(mask.grid), feature_(mask.grid.size()) {
        if (mask.cells.empty()) throw std::invalid_argument("MaskDistance: empty mask");
        const int n = grid_.n;
        constexpr double kInf = 1e30;
        // Column pass: nearest occupied row within each column.
        std::vector<double> g(grid_.size(), kInf);
        std::vector<int> grow(grid_.size(), -1);
        std::vector<char> occ(grid_.size(), 0);
        for (std::size_t c : mask.cells) occ[c] = 1;
        for (int i = 0; i < n; ++i) {
            int last = -1;
            for (int j = 0; j < n; ++j) {
                if (occ[grid_.index(i, j)]) last = j;
                if (last >= 0) {
                    g[grid_.index(i, j)] = static_cast<double>(j - last) * (j - last);
                    grow[grid_.index(i, j)] = last;
                }
            }
            last = -1;
            for (int j = n - 1; j >= 0; --j) {
                if (occ[grid_.index(i, j)]) last = j;
                if (last >= 0) {
                    const double d = static_cast<double>(last - j) * (last - j);
                    if (d < g[grid_.index(i, j)]) {
                        g[grid_.index(i, j)] = d;
                        grow[grid_.index(i, j)] = last;
                    }
                }
            }
        }
        // Row pass: lower envelope of parabolas (Felzenszwalb-Huttenlocher).
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        for (int j = 0; j < n; ++j) {
            int k = -1;
            for (int q = 0; q < n; ++q) {
                const double fq = g[grid_.index(q, j)];
                if (fq >= kInf) continue;
                while (k >= 0) {
                    const int p = v[k];
                    const double fp = g[grid_.index(p, j)];
                    const double s = ((fq + static_cast<double>(q) * q) - (fp + static_cast<double>(p) * p)) / (2.0 * (q - p));
                    if (s <= z[k]) {
                        --k;
                    } else {
                        break;
                    }
                }
                ++k;
                v[k] = q;
                z[k] = k == 0 ? -kInf : ((fq + static_cast<double>(q) * q) - (g[grid_.index(v[k - 1], j)] +
                                                                              static_cast<double>(v[k - 1]) * v[k - 1])) /
                                            (2.0 * (q - v[k - 1]));
                z[k + 1] = kInf;
            }
            if (k < 0) continue;
            int idx = 0;
            for (int q = 0; q < n; ++q) {
                while (z[idx + 1] < q) ++idx;
                const int p = v[idx];
                feature_[grid_.index(q, j)] = grid_.index(p, grow[grid_.index(p, j)]);
            }
        }
    }

    double distance(Point z) const {
        const auto [ci, cj] = grid_.cell_of(z);
        double best = std::numeric_limits<double>::infinity();
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const int i = ci + di, j = cj + dj;
                if (i < 0 || j < 0 || i >= grid_.n || j >= grid_.n) continue;
                const std::size_t f = feature_[grid_.index(i, j)];
                const Point c = grid_.center(static_cast<int>(f % grid_.n), static_cast<int>(f / grid_.n));
                best = std::fmin(best, lqg::distance(z, c));
            }
        }
        return best;
    }

    /// Nearest occupied cell to cell (i, j).
    std::size_t feature(int i, int j) const { return feature_[grid_.index(i, j)]; }

private:
    Grid grid_;
    std::vector<std::size_t> feature_;
};

/// Box-counting dimension over boxes of the given sides laid out from origin.
struct BoxCount {
    std::vector<double> sides;
    std::vector<std::size_t> counts;
    double dimension = 0.0;
    double r2 = 0.0;
};

inline BoxCount box_count(const FractalMask& mask, std::span<const double> sides, Point origin = {0.0, 0.0}) {
    if (sides.size() < 2) throw std::invalid_argument("box_count: need >= 2 box sizes");
    BoxCount bc;
    std::vector<double> lx, ly;
    for (double s : sides) {
        std::vector<std::uint64_t> keys;
        keys.reserve(mask.cells.size());
        for (std::size_t c : mask.cells) {
            const Point p = mask.center(c);
            const auto bi = static_cast<std::int64_t>(std::floor((p.x - origin.x) / s));
            const auto bj = static_cast<std::int64_t>(std::floor((p.y - origin.y) / s));
            keys.push_back((static_cast<std::uint64_t>(bj + (1 << 20)) << 32) | static_cast<std::uint64_t>(bi + (1 << 20)));
        }
        std::sort(keys.begin(), keys.end());
        const auto count = static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
        bc.sides.push_back(s);
        bc.counts.push_back(count);
        lx.push_back(std::log(s));
        ly.push_back(std::log(static_cast<double>(count)));
    }
    const auto fit = stats::linear_fit(lx, ly);
    bc.dimension = -fit.slope;
    bc.r2 = fit.r2;
    return bc;
}

// ---------------------------------------------------------------------------
// Exponent estimation
// ---------------------------------------------------------------------------

struct ScalePoint {
    double scale = 0.0;
    double log_probability = 0.0;
    std::size_t hits = 0;
    std::size_t trials = 0;
};

struct DroppedScale {
    double scale = 0.0;
    std::string code;  // few_hits, few_misses, unresolved
    std::string detail;
};

struct ExponentEstimate {
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    std::vector<ScalePoint> scales;
    std::vector<DroppedScale> dropped;
    double r2 = 0.0;
    /// At least 4 scales spanning 1.2 decades.
    bool sufficient = false;
};

namespace detail {

/// Keep rungs with 10 <= hits <= trials - 10; returns indices of kept rungs.
inline std::vector<std::size_t> usable_rungs(std::span<const double> scales, std::span<const std::size_t> hits,
                                             std::span<const std::size_t> trials, std::vector<DroppedScale>& dropped) {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < scales.size(); ++k) {
        if (hits[k] < 10) {
            dropped.push_back({scales[k], "few_hits", std::to_string(hits[k]) + " hits"});
        } else if (hits[k] + 10 > trials[k]) {
            dropped.push_back({scales[k], "few_misses", std::to_string(trials[k] - hits[k]) + " misses"});
        } else {
            keep.push_back(k);
        }
    }
    return keep;
}

inline double slope_of(std::span<const double> scales, std::span<const std::size_t> keep, std::span<const double> hits,
                       std::span<const double> trials) {
    std::vector<double> lx, ly;
    for (std::size_t k : keep) {
        if (!(hits[k] > 0.0) || !(trials[k] > 0.0)) continue;
        lx.push_back(std::log(scales[k]));
        ly.push_back(std::log(hits[k] / trials[k]));
    }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return stats::linear_fit(lx, ly).slope;
}

inline void finish_estimate(ExponentEstimate& est, std::span<const double> scales, std::span<const std::size_t> keep,
                            std::span<const std::size_t> hits, std::span<const std::size_t> trials, double divisor) {
    std::vector<double> lx, ly;
    for (std::size_t k : keep) {
        const double p = static_cast<double>(hits[k]) / static_cast<double>(trials[k]);
        est.scales.push_back({scales[k], std::log(p), hits[k], trials[k]});
        lx.push_back(std::log(scales[k]));
        ly.push_back(std::log(p));
    }
    if (lx.size() >= 2) {
        const auto fit = stats::linear_fit(lx, ly);
        est.exponent = fit.slope / divisor;
        est.r2 = fit.r2;
        const double span = (*std::max_element(lx.begin(), lx.end()) - *std::min_element(lx.begin(), lx.end())) / std::log(10.0);
        est.sufficient = lx.size() >= 4 && span >= 1.2 - 1e-9;
    }
}

inline double bootstrap_stderr(std::span<const double> replicates) {
    std::vector<double> finite;
    for (double r : replicates)
        if (std::isfinite(r)) finite.push_back(r);
    if (finite.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(stats::moments(finite).variance);
}

}  // namespace detail

struct EuclideanOptions {
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    int n_boot = 200;
};

/// x from P{dist(z, X) <= eps} ~ eps^{2x} for z uniform in D; bootstrap over samples.
inline ExponentEstimate euclidean_exponent(const FractalMask& mask, std::span<const double> eps_ladder,
                                           const EuclideanOptions& opt = {}) {
    for (double e : eps_ladder) {
        if (!(e >= 2.0 * mask.grid.spacing * (1.0 - 1e-12))) {
            throw std::invalid_argument("euclidean_exponent: eps " + std::to_string(e) + " below resolution");
        }
    }
    const MaskDistance dist(mask);
    Philox4x32 rng(opt.seed, 0);
    std::vector<double> d(opt.n_samples);
    for (auto& v : d) {
        const double x = rng.uniform();
        const double y = rng.uniform();
        v = dist.distance({x, y});
    }
    const std::size_t R = eps_ladder.size();
    auto count = [&](auto&& index_of) {
        std::vector<double> hits(R, 0.0);
        for (std::size_t s = 0; s < d.size(); ++s) {
            const double v = d[index_of(s)];
            for (std::size_t k = 0; k < R; ++k)
                if (v <= eps_ladder[k]) hits[k] += 1.0;
        }
        return hits;
    };
    const auto hits_d = count([](std::size_t s) { return s; });
    std::vector<std::size_t> hits(R), trials(R, opt.n_samples);
    for (std::size_t k = 0; k < R; ++k) hits[k] = static_cast<std::size_t>(hits_d[k]);
    ExponentEstimate est;
    const auto keep = detail::usable_rungs(eps_ladder, hits, trials, est.dropped);
    detail::finish_estimate(est, eps_ladder, keep, hits, trials, 2.0);
    std::vector<double> reps;
    Philox4x32 boot(opt.seed, 1);
    const std::vector<double> tr(R, static_cast<double>(opt.n_samples));
    for (int b = 0; b < opt.n_boot; ++b) {
        std::vector<std::uint32_t> pick(d.size());
        for (auto& p : pick) p = static_cast<std::uint32_t>(boot.uniform() * static_cast<double>(d.size()));
        const auto h = count([&](std::size_t s) { return pick[s]; });
        reps.push_back(detail::slope_of(eps_ladder, keep, h, tr) / 2.0);
    }
    est.std_error = detail::bootstrap_stderr(reps);
    return est;
}

struct QuantumOptions {
    std::size_t n_fields = 200;
    std::size_t n_points = 2000;
    std::uint64_t seed = 1;
    LadderOptions ladder{};
    double eps_density = 0.0;  // 0 selects 2 * spacing
    Window window{0.125, 0.875};
    int n_boot = 200;
    /// Rungs are dropped when undetermined outcomes exceed this fraction of
    /// (hits + undetermined).
    double max_undetermined = 0.1;
    unsigned workers = 0;
};

/// Per-rung outcome counts for one mask and one field.
struct RungCounts {
    std::vector<std::size_t> hits, trials, undetermined, top, floor;
    explicit RungCounts(std::size_t r = 0) : hits(r), trials(r), undetermined(r), top(r), floor(r) {}
};

enum class BallOutcome { hit, miss, undetermined };

/// Whether a ball of the solved radius around z meets a set at distance d.
/// Outside the resolvable range only the bracket is known; the outcome is
/// still decided when d falls on the right side of it.
inline BallOutcome ball_outcome(const QuantumBallResult& r, double d) {
    switch (r.status) {
        case BallStatus::crossed: return d <= r.eps ? BallOutcome::hit : BallOutcome::miss;
        case BallStatus::below_at_top: return d <= r.eps_lower ? BallOutcome::hit : BallOutcome::undetermined;
        case BallStatus::above_at_floor: return d > r.eps_upper ? BallOutcome::miss : BallOutcome::undetermined;
    }
    return BallOutcome::undetermined;
}

namespace detail {

inline std::vector<ExponentEstimate> summarize_quantum(std::span<const double> deltas,
                                                       const std::vector<std::vector<RungCounts>>& per_field,
                                                       std::size_t n_masks, const QuantumOptions& opt) {
    const std::size_t R = deltas.size();
    const std::size_t F = per_field.size();
    std::vector<ExponentEstimate> out(n_masks);
    for (std::size_t m = 0; m < n_masks; ++m) {
        RungCounts total(R);
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t k = 0; k < R; ++k) {
                total.hits[k] += per_field[f][m].hits[k];
                total.trials[k] += per_field[f][m].trials[k];
                total.undetermined[k] += per_field[f][m].undetermined[k];
            }
        }
        ExponentEstimate& est = out[m];
        std::vector<std::size_t> keep;
        std::vector<std::size_t> kept_base = usable_rungs(deltas, total.hits, total.trials, est.dropped);
        for (std::size_t k : kept_base) {
            const double und = static_cast<double>(total.undetermined[k]);
            const double frac = und / (und + static_cast<double>(total.hits[k]));
            if (frac > opt.max_undetermined) {
                est.dropped.push_back({deltas[k], "unresolved", "undetermined fraction " + std::to_string(frac)});
            } else {
                keep.push_back(k);
            }
        }
        finish_estimate(est, deltas, keep, total.hits, total.trials, 1.0);
        Philox4x32 boot(opt.seed ^ 0xB007u, m);
        std::vector<double> reps;
        for (int b = 0; b < opt.n_boot; ++b) {
            std::vector<double> h(R, 0.0), t(R, 0.0);
            for (std::size_t f = 0; f < F; ++f) {
                const auto pick = static_cast<std::size_t>(boot.uniform() * static_cast<double>(F));
                for (std::size_t k = 0; k < R; ++k) {
                    h[k] += static_cast<double>(per_field[pick][m].hits[k]);
                    t[k] += static_cast<double>(per_field[pick][m].trials[k]);
                }
            }
            reps.push_back(slope_of(deltas, keep, h, t));
        }
        est.std_error = bootstrap_stderr(reps);
    }
    return out;
}

}  // namespace detail

/// Delta-hat for several masks from one shared (field, z) ensemble: for each
/// field, z is drawn from its quantum measure (restricted to the window), the
/// quantum ball is solved once per z for every delta, and each mask is tested
/// for intersection. Bootstrap over fields.
inline std::vector<ExponentEstimate> quantum_exponents(std::span<const FractalMask> masks, double gamma,
                                                       std::span<const double> delta_ladder,
                                                       const QuantumOptions& opt) {
    if (masks.empty()) throw std::invalid_argument("quantum_exponents: no masks");
    if (!(gamma >= 0.0 && gamma < 2.0)) throw std::invalid_argument("quantum_exponents: requires 0 <= gamma < 2");
    const Grid grid = masks.front().grid;
    std::vector<MaskDistance> dists;
    for (const auto& m : masks) {
        if (!(m.grid == grid)) throw std::invalid_argument("quantum_exponents: masks on different grids");
        dists.emplace_back(m);
    }
    const double eps_density = opt.eps_density > 0.0 ? opt.eps_density : 2.0 * grid.spacing;
    const SpectralCircleAverager averager(grid, eps_density);
    const double min_delta = *std::min_element(delta_ladder.begin(), delta_ladder.end());
    const std::size_t R = delta_ladder.size();
    std::vector<std::vector<RungCounts>> per_field(opt.n_fields, std::vector<RungCounts>(masks.size(), RungCounts(R)));
    parallel_for(
        opt.n_fields,
        [&](std::size_t f) {
            const std::uint64_t fs = field_seed(opt.seed, f);
            const GridField field = sample_gff(grid, fs);
            const QuantumDensity density = make_quantum_density(field, gamma, averager);
            const QuantumPointSampler sampler(density, opt.window);
            Philox4x32 rng(fs, 2);
            std::vector<double> d(masks.size());
            for (std::size_t p = 0; p < opt.n_points; ++p) {
                const Point z = sampler.draw(rng);
                const auto trace = scan_ball_masses(field, gamma, z, opt.ladder, min_delta);
                for (std::size_t m = 0; m < masks.size(); ++m) d[m] = dists[m].distance(z);
                for (std::size_t k = 0; k < R; ++k) {
                    const QuantumBallResult r = resolve_ball(z, delta_ladder[k], trace);
                    for (std::size_t m = 0; m < masks.size(); ++m) {
                        RungCounts& c = per_field[f][m];
                        switch (ball_outcome(r, d[m])) {
                            case BallOutcome::hit: ++c.hits[k]; ++c.trials[k]; break;
                            case BallOutcome::miss: ++c.trials[k]; break;
                            case BallOutcome::undetermined: ++c.undetermined[k]; break;
                        }
                        if (r.status == BallStatus::below_at_top) ++c.top[k];
                        if (r.status == BallStatus::above_at_floor) ++c.floor[k];
                    }
                }
            }
        },
        opt.workers ? opt.workers : worker_count());
    return detail::summarize_quantum(delta_ladder, per_field, masks.size(), opt);
}

inline ExponentEstimate quantum_exponent(const FractalMask& mask, double gamma, std::span<const double> delta_ladder,
                                         const QuantumOptions& opt) {
    return quantum_exponents(std::span<const FractalMask>(&mask, 1), gamma, delta_ladder, opt).front();
}

/// Default delta ladder 10^{-2 - k/2}, k = 0..5.
inline std::vector<double> default_delta_ladder() {
    std::vector<double> d;
    for (int k = 0; k <= 5; ++k) d.push_back(std::pow(10.0, -2.0 - k / 2.0));
    return d;
}

struct KpzRow {
    std::string mask;
    double gamma = 0.0;
    double x_hat = 0.0;
    double x_stderr = 0.0;
    double delta_hat = 0.0;
    double delta_stderr = 0.0;
    double delta_theory = 0.0;      // Delta_gamma(x_hat)
    double delta_known = std::numeric_limits<double>::quiet_NaN();  // Delta_gamma(known_x)
    double z = 0.0;                 // (delta_hat - delta_theory) / delta_stderr
    bool sufficient = false;
    std::vector<DroppedScale> dropped;  // quantum rungs
    std::vector<DroppedScale> euclidean_dropped;
    std::vector<ScalePoint> euclidean_scales;
    std::vector<ScalePoint> quantum_scales;
};

/// KPZ prediction for a measured x; gamma = 0 is the identity.
inline double kpz_prediction(double gamma, double x) {
    if (gamma == 0.0) return x;
    return kpz_delta_of_x(GammaParams::from_gamma(gamma), std::max(0.0, x)).delta;
}

/// The verification table: one row per (mask, gamma).
inline std::vector<KpzRow> kpz_verify(std::span<const FractalMask> masks, std::span<const double> gammas,
                                      std::span<const double> eps_ladder, std::span<const double> delta_ladder,
                                      const EuclideanOptions& eopt, const QuantumOptions& qopt) {
    std::vector<ExponentEstimate> euclid;
    for (const auto& m : masks) euclid.push_back(euclidean_exponent(m, eps_ladder, eopt));
    std::vector<KpzRow> rows;
    for (double gamma : gammas) {
        const auto quantum = quantum_exponents(masks, gamma, delta_ladder, qopt);
        for (std::size_t m = 0; m < masks.size(); ++m) {
            KpzRow r;
            r.mask = to_string(masks[m].kind);
            r.gamma = gamma;
            r.x_hat = euclid[m].exponent;
            r.x_stderr = euclid[m].std_error;
            r.delta_hat = quantum[m].exponent;
            r.delta_stderr = quantum[m].std_error;
            r.delta_theory = kpz_prediction(gamma, r.x_hat);
            if (masks[m].known_x) r.delta_known = kpz_prediction(gamma, *masks[m].known_x);
            r.z = r.delta_stderr > 0.0 ? (r.delta_hat - r.delta_theory) / r.delta_stderr : 0.0;
            r.sufficient = quantum[m].sufficient && euclid[m].sufficient;
            r.dropped = quantum[m].dropped;
            r.euclidean_dropped = euclid[m].dropped;
            r.euclidean_scales = euclid[m].scales;
            r.quantum_scales = quantum[m].scales;
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace lqg
