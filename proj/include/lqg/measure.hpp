#pragma once

// Regularised quantum area measure M_eps(z) dz = eps^{gamma^2/2} e^{gamma h_eps(z)} dz,
// the ball-mass law mu(B_eps(z)) = pi eps^{gamma Q} e^{gamma h_eps(z)} (taken as
// the definition of the mass of a Euclidean ball), and quantum balls: the
// largest Euclidean ball around z whose mass has dropped to delta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lqg/gff.hpp"
#include "lqg/kpz.hpp"
#include "lqg/parallel.hpp"
#include "lqg/random.hpp"
#include "lqg/stats.hpp"

namespace lqg {

/// pi eps^{gamma Q} exp(gamma h), with gamma Q = 2 + gamma^2/2. gamma = 0 is
/// the Lebesgue area pi eps^2.
inline double ball_mass_from_average(double gamma, double eps, double h_eps) {
    if (gamma == 0.0) return std::numbers::pi * eps * eps;
    return std::numbers::pi * std::pow(eps, 2.0 + gamma * gamma / 2.0) * std::exp(gamma * h_eps);
}

inline double ball_mass(const GridField& field, double gamma, Point z, double eps) {
    const CircleAverage c = circle_average(field, z, eps);
    return ball_mass_from_average(gamma, eps, c.value);
}

// ---------------------------------------------------------------------------
// Quantum balls
// ---------------------------------------------------------------------------

struct LadderOptions {
    double eps_max = 0.125;
    double ratio = 0.9170040432046712;  // 2^{-1/8}
};

enum class BallStatus {
    crossed,       // mass fell to delta between two rungs
    below_at_top,  // mass already <= delta at the first rung: ball at least that large
    above_at_floor // mass still > delta at the resolution floor: ball below the floor
};

inline const char* to_string(BallStatus s) {
    switch (s) {
        case BallStatus::crossed: return "crossed";
        case BallStatus::below_at_top: return "below_at_top";
        case BallStatus::above_at_floor: return "above_at_floor";
    }
    return "?";
}

struct ScanPoint {
    double eps = 0.0;
    double mass = 0.0;
};

struct QuantumBallResult {
    Point z;
    double delta = 0.0;
    double eps = 0.0;  // interpolated radius (0 when not hit)
    bool hit = false;
    BallStatus status = BallStatus::above_at_floor;
    double eps_lower = 0.0;  // rung with mass <= delta (largest such), or 0
    double eps_upper = 0.0;  // rung just above it with mass > delta, or +inf
    std::vector<ScanPoint> trace;
};

/// Rung radii eps_max * ratio^k that are <= limit and >= floor.
inline std::vector<double> ladder_rungs(const LadderOptions& opt, double limit, double floor) {
    if (!(opt.ratio > 0.0 && opt.ratio < 1.0)) throw std::invalid_argument("ladder ratio must lie in (0, 1)");
    std::vector<double> rungs;
    double eps = opt.eps_max;
    for (int k = 0; eps >= floor * (1.0 - 1e-12); ++k, eps = opt.eps_max * std::pow(opt.ratio, k)) {
        if (eps <= limit * (1.0 + 1e-12)) rungs.push_back(eps);
    }
    return rungs;
}

/// Ball masses down the ladder around z, stopping after the first rung whose
/// mass is <= stop_mass. Rungs larger than the distance to the boundary are
/// skipped for Dirichlet fields.
template <class MassFn>
std::vector<ScanPoint> scan_ladder(const Grid& grid, Point z, const LadderOptions& opt, double stop_mass,
                                   MassFn&& mass_at) {
    const double floor = 2.0 * grid.spacing;
    const double limit = grid.bc == BoundaryCondition::dirichlet ? boundary_distance(z) : opt.eps_max;
    std::vector<ScanPoint> trace;
    for (double eps : ladder_rungs(opt, limit, floor)) {
        const double m = mass_at(eps);
        trace.push_back({eps, m});
        if (m <= stop_mass) break;
    }
    return trace;
}

inline std::vector<ScanPoint> scan_ball_masses(const GridField& field, double gamma, Point z,
                                               const LadderOptions& opt, double stop_mass) {
    if (boundary_distance(z) < 2.0 * field.grid.spacing) throw std::invalid_argument("quantum ball: z too close to the boundary");
    return scan_ladder(field.grid, z, opt, stop_mass, [&](double eps) {
        return ball_mass_from_average(gamma, eps, circle_average_unchecked(field, z, eps));
    });
}

/// Solve mass(eps) = delta on a recorded trace: the first (largest) rung with
/// mass <= delta, log-linearly interpolated against the rung above it.
inline QuantumBallResult resolve_ball(Point z, double delta, std::span<const ScanPoint> trace) {
    if (!(delta > 0.0)) throw std::invalid_argument("quantum ball: delta must be positive");
    QuantumBallResult r;
    r.z = z;
    r.delta = delta;
    r.eps_upper = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace[k].mass > delta) continue;
        r.eps_lower = trace[k].eps;
        if (k == 0) {
            r.status = BallStatus::below_at_top;
            return r;
        }
        const ScanPoint& hi = trace[k - 1];
        const ScanPoint& lo = trace[k];
        r.eps_upper = hi.eps;
        const double lm_hi = std::log(hi.mass), lm_lo = std::log(lo.mass);
        const double le_hi = std::log(hi.eps), le_lo = std::log(lo.eps);
        const double t = lm_hi == lm_lo ? 1.0 : (std::log(delta) - lm_hi) / (lm_lo - lm_hi);
        r.eps = std::exp(le_hi + t * (le_lo - le_hi));
        r.hit = true;
        r.status = BallStatus::crossed;
        return r;
    }
    r.status = BallStatus::above_at_floor;
    r.eps_upper = trace.empty() ? 0.0 : trace.back().eps;
    return r;
}

inline QuantumBallResult quantum_ball_radius(const GridField& field, double gamma, Point z, double delta,
                                             const LadderOptions& opt = {}) {
    auto trace = scan_ball_masses(field, gamma, z, opt, delta);
    QuantumBallResult r = resolve_ball(z, delta, trace);
    r.trace = std::move(trace);
    return r;
}

// ---------------------------------------------------------------------------
// Quantum density on the grid and point sampling
// ---------------------------------------------------------------------------

/// Cell masses M_eps(centre) * cell area for one field. The field is
/// referenced, not owned.
struct QuantumDensity {
    const GridField* field = nullptr;
    double gamma = 0.0;
    double eps = 0.0;
    std::vector<double> masses;

    double total() const {
        double s = 0.0;
        for (double m : masses) s += m;
        return s;
    }

    double region_mass(std::span<const std::size_t> cells) const {
        double s = 0.0;
        for (std::size_t c : cells) s += masses[c];
        return s;
    }
};

inline QuantumDensity make_quantum_density(const GridField& field, double gamma, const SpectralCircleAverager& averager) {
    QuantumDensity d;
    d.field = &field;
    d.gamma = gamma;
    d.eps = averager.eps();
    const double area = field.grid.spacing * field.grid.spacing;
    if (gamma == 0.0) {
        d.masses.assign(field.grid.size(), area);
        return d;
    }
    const GridField h = averager.apply(field);
    const double reg = std::pow(d.eps, gamma * gamma / 2.0) * area;
    d.masses.resize(h.values.size());
    for (std::size_t i = 0; i < h.values.size(); ++i) d.masses[i] = reg * std::exp(gamma * h.values[i]);
    return d;
}

inline QuantumDensity make_quantum_density(const GridField& field, double gamma, double eps) {
    return make_quantum_density(field, gamma, SpectralCircleAverager(field.grid, eps));
}

/// Axis-aligned square [lo, hi]^2 restricting where points may be drawn.
struct Window {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(Point p) const { return p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi; }
};

/// Inverse-CDF sampler over the cell masses, restricted to cells whose
/// centres lie in the window; draws are jittered uniformly in the cell.
class QuantumPointSampler {
public:
    QuantumPointSampler(const QuantumDensity& density, Window window = {}) : grid_(density.field->grid) {
        const int n = grid_.n;
        cells_.reserve(density.masses.size());
        cdf_.reserve(density.masses.size());
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                if (!window.contains(grid_.center(i, j))) continue;
                const double m = density.masses[grid_.index(i, j)];
                if (!(m > 0.0) || !std::isfinite(m)) continue;
                acc += m;
                cells_.push_back(grid_.index(i, j));
                cdf_.push_back(acc);
            }
        }
        if (cdf_.empty()) throw std::invalid_argument("QuantumPointSampler: no mass in window");
    }

    double total() const { return cdf_.back(); }

    std::size_t draw_cell(Philox4x32& rng) const {
        const double u = rng.uniform() * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return cells_[static_cast<std::size_t>(it - cdf_.begin())];
    }

    Point draw(Philox4x32& rng) const {
        const std::size_t c = draw_cell(rng);
        const int i = static_cast<int>(c % grid_.n);
        const int j = static_cast<int>(c / grid_.n);
        const double jx = rng.uniform();
        const double jy = rng.uniform();
        return {(i + jx) * grid_.spacing, (j + jy) * grid_.spacing};
    }

private:
    Grid grid_;
    std::vector<std::size_t> cells_;
    std::vector<double> cdf_;
};

inline Point sample_quantum_point(const QuantumDensity& density, Philox4x32& rng) {
    return QuantumPointSampler(density).draw(rng);
}

// ---------------------------------------------------------------------------
// Ensemble checks of the exponential expectation E e^{gamma h_eps} = (C/eps)^{gamma^2/2}
// ---------------------------------------------------------------------------

struct DensityRatio {
    std::vector<double> ratio;   // mean M_eps(z) / C(z)^{gamma^2/2}; NaN at unusable sites
    std::vector<double> std_error;  // standard error of the ratio
};

/// Per-site ratio over an ensemble, using spectral circle averages.
inline DensityRatio expected_density_check(const Grid& grid, double gamma, double eps, std::size_t n_fields,
                                           std::uint64_t seed, unsigned workers = worker_count()) {
    const GreenTable table = build_green_table(grid);
    const std::size_t sites = grid.size();
    DensityRatio out{std::vector<double>(sites, std::numeric_limits<double>::quiet_NaN()),
                     std::vector<double>(sites, std::numeric_limits<double>::quiet_NaN())};
    if (gamma == 0.0) {
        for (std::size_t s = 0; s < sites; ++s) {
            if (!std::isnan(table.conformal_radius[s])) {
                out.ratio[s] = 1.0;
                out.std_error[s] = 0.0;
            }
        }
        return out;
    }
    const SpectralCircleAverager averager(grid, eps);
    const double reg = std::pow(eps, gamma * gamma / 2.0);
    std::vector<double> sum(sites, 0.0), sum2(sites, 0.0);
    const std::size_t chunk = std::max<std::size_t>(8, workers);
    std::vector<std::vector<double>> buffer(chunk);
    for (std::size_t start = 0; start < n_fields; start += chunk) {
        const std::size_t count = std::min(chunk, n_fields - start);
        parallel_for(
            count,
            [&](std::size_t k) {
                const GridField h = averager.apply(sample_gff(grid, field_seed(seed, start + k)));
                buffer[k].resize(sites);
                for (std::size_t s = 0; s < sites; ++s) buffer[k][s] = reg * std::exp(gamma * h.values[s]);
            },
            workers);
        for (std::size_t k = 0; k < count; ++k) {
            for (std::size_t s = 0; s < sites; ++s) {
                sum[s] += buffer[k][s];
                sum2[s] += buffer[k][s] * buffer[k][s];
            }
        }
    }
    const double nf = static_cast<double>(n_fields);
    for (std::size_t s = 0; s < sites; ++s) {
        const double c = table.conformal_radius[s];
        if (std::isnan(c)) continue;
        const double mean = sum[s] / nf;
        const double var = n_fields > 1 ? std::fmax(0.0, (sum2[s] - nf * mean * mean) / (nf - 1.0)) : 0.0;
        const double scale = std::pow(c, gamma * gamma / 2.0);
        out.ratio[s] = mean / scale;
        out.std_error[s] = std::sqrt(var / nf) / scale;
    }
    return out;
}

struct DensityAtPoint {
    std::vector<double> eps;
    std::vector<stats::Moments> mass;  // moments of M_eps(z) across fields
    double expected = 0.0;             // C(z)^{gamma^2/2}
};

/// Moments of M_eps(z) at one point (bilinear circle averages) for several eps.
inline DensityAtPoint expected_density_at(const Grid& grid, double gamma, Point z, std::span<const double> eps,
                                          std::size_t n_fields, std::uint64_t seed, unsigned workers = worker_count()) {
    for (double e : eps) check_circle(grid, z, e);
    const auto samples = site_ensemble(
        grid, seed, n_fields, 1, eps, [](const Grid& g, std::uint64_t s) { return sample_gff(g, s); },
        [&](const GridField& f, std::size_t, double e) {
            return std::pow(e, gamma * gamma / 2.0) * std::exp(gamma * circle_average_unchecked(f, z, e));
        },
        workers)[0];
    DensityAtPoint out;
    out.eps.assign(eps.begin(), eps.end());
    out.expected = std::pow(conformal_radius(z), gamma * gamma / 2.0);
    std::vector<double> column(n_fields);
    for (std::size_t k = 0; k < eps.size(); ++k) {
        for (std::size_t f = 0; f < n_fields; ++f) column[f] = samples[f][k];
        out.mass.push_back(stats::moments(column));
    }
    return out;
}

struct WeightedDrift {
    std::vector<double> t;          // -log eps
    std::vector<double> mean_h;     // weighted-ensemble mean of h_eps(z)
    std::vector<double> mean_h_unweighted;  // same at uniform z
    double slope = 0.0;             // d mean_h / dt
    double slope_unweighted = 0.0;
};

/// Draw z from the quantum measure of each field and record the mean of
/// t -> h_{e^{-t}}(z); under the weighting this is Brownian motion with drift gamma.
inline WeightedDrift measure_weighted_drift(const Grid& grid, double gamma, double eps_density, std::span<const double> eps,
                                            std::size_t n_fields, std::size_t n_points, std::uint64_t seed,
                                            unsigned workers = worker_count()) {
    const double margin = *std::max_element(eps.begin(), eps.end());
    const Window window{margin, 1.0 - margin};
    const SpectralCircleAverager averager(grid, eps_density);
    std::vector<std::vector<double>> weighted(n_fields, std::vector<double>(eps.size(), 0.0));
    std::vector<std::vector<double>> uniform(n_fields, std::vector<double>(eps.size(), 0.0));
    parallel_for(
        n_fields,
        [&](std::size_t f) {
            const std::uint64_t fs = field_seed(seed, f);
            const GridField field = sample_gff(grid, fs);
            const QuantumDensity density = make_quantum_density(field, gamma, averager);
            const QuantumPointSampler sampler(density, window);
            Philox4x32 rng(fs, 1);
            for (std::size_t p = 0; p < n_points; ++p) {
                const Point zq = sampler.draw(rng);
                const Point zu{window.lo + (window.hi - window.lo) * rng.uniform(),
                               window.lo + (window.hi - window.lo) * rng.uniform()};
                for (std::size_t k = 0; k < eps.size(); ++k) {
                    weighted[f][k] += circle_average_unchecked(field, zq, eps[k]);
                    uniform[f][k] += circle_average_unchecked(field, zu, eps[k]);
                }
            }
        },
        workers);
    WeightedDrift out;
    const double total = static_cast<double>(n_fields * n_points);
    for (std::size_t k = 0; k < eps.size(); ++k) {
        double sw = 0.0, su = 0.0;
        for (std::size_t f = 0; f < n_fields; ++f) {
            sw += weighted[f][k];
            su += uniform[f][k];
        }
        out.t.push_back(-std::log(eps[k]));
        out.mean_h.push_back(sw / total);
        out.mean_h_unweighted.push_back(su / total);
    }
    out.slope = stats::linear_fit(out.t, out.mean_h).slope;
    out.slope_unweighted = stats::linear_fit(out.t, out.mean_h_unweighted).slope;
    return out;
}

}  // namespace lqg
