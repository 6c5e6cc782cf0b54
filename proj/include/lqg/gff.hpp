#pragma once

// Discrete Gaussian free field on the unit square, circle averages, and the
// conformal-radius table that fixes the variance law
//   Var h_eps(z) = -log eps + log C(z; D).
//
// Sampling is spectral: the field is expanded in the eigenvectors of the
// cell-centred 5-point Laplacian (sine modes for Dirichlet, cosine modes for
// free boundary), each with variance 2*pi/lambda. The 2*pi makes the
// covariance the Green function of -Laplacian = 2*pi*delta, i.e. -log|z-w|
// at short range.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lqg/grid.hpp"
#include "lqg/parallel.hpp"
#include "lqg/random.hpp"
#include "lqg/spectral.hpp"
#include "lqg/stats.hpp"

namespace lqg {

/// Eigenvalue of the 1-D cell-centred Laplacian for mode index j.
inline double mode_eigenvalue(int n, int j) {
    const double s = std::sin(std::numbers::pi * j / (2.0 * n));
    return 4.0 * n * static_cast<double>(n) * s * s;
}

namespace detail {

/// Normalised-eigenvector amplitude divided by the FFTW synthesis weight for
/// the mode at array position p (0-based).
inline double synthesis_scale(int n, int p, BoundaryCondition bc) {
    // Per-axis eigenvectors sqrt(2) sin(pi j x) are orthonormal under the
    // cell-area weight; FFTW synthesis weights are 2 (1 for the end mode).
    const double half = std::sqrt(0.5);
    const double full = 1.0;
    if (bc == BoundaryCondition::dirichlet) return p == n - 1 ? full : half;  // mode j = p + 1
    return p == 0 ? full : half;                                               // mode j = p
}

inline int mode_of(int p, BoundaryCondition bc) { return bc == BoundaryCondition::dirichlet ? p + 1 : p; }

inline GridField synthesize(const Grid& grid, std::uint64_t seed) {
    const int n = grid.n;
    GridField f(grid, seed);
    NormalStream normal(seed, 0);
    std::vector<double> scale(n), lambda(n);
    for (int p = 0; p < n; ++p) {
        scale[p] = synthesis_scale(n, p, grid.bc);
        lambda[p] = mode_eigenvalue(n, mode_of(p, grid.bc));
    }
    const double two_pi = 2.0 * std::numbers::pi;
    for (int q = 0; q < n; ++q) {
        for (int p = 0; p < n; ++p) {
            const double lam = lambda[p] + lambda[q];
            if (lam == 0.0) {
                f.values[grid.index(p, q)] = 0.0;  // constant mode of the free field
                continue;
            }
            f.values[grid.index(p, q)] = normal() * std::sqrt(two_pi / lam) * scale[p] * scale[q];
        }
    }
    spectral::transform(f.values, n, grid.bc == BoundaryCondition::dirichlet ? spectral::Kind::sine_synthesis
                                                                             : spectral::Kind::cosine_synthesis);
    if (grid.bc == BoundaryCondition::free) {
        // The constant mode is absent; subtracting the mean pins the roundoff.
        double s = 0.0;
        for (double v : f.values) s += v;
        const double mean = s / static_cast<double>(f.values.size());
        for (double& v : f.values) v -= mean;
    }
    return f;
}

/// Unit-circle nodes cos/sin(2 pi k / K), cached per K and thread.
inline const std::vector<double>& circle_nodes(int k_points) {
    thread_local std::map<int, std::vector<double>> cache;
    auto it = cache.find(k_points);
    if (it != cache.end()) return it->second;
    std::vector<double> nodes(2 * static_cast<std::size_t>(k_points));
    for (int k = 0; k < k_points; ++k) {
        const double t = 2.0 * std::numbers::pi * k / k_points;
        nodes[2 * k] = std::cos(t);
        nodes[2 * k + 1] = std::sin(t);
    }
    return cache.emplace(k_points, std::move(nodes)).first->second;
}

}  // namespace detail

/// Sample a Dirichlet GFF; deterministic in (grid, seed).
inline GridField sample_gff(const Grid& grid, std::uint64_t seed) {
    if (grid.bc != BoundaryCondition::dirichlet) throw std::invalid_argument("sample_gff: grid must be Dirichlet");
    return detail::synthesize(grid, seed);
}

/// Seed of field `index` in an ensemble rooted at `seed`.
inline std::uint64_t field_seed(std::uint64_t seed, std::uint64_t index) { return mix_seed(seed, index); }

struct CircleAverage {
    Point z;
    double eps = 0.0;
    double value = 0.0;
};

/// Number of quadrature nodes on a circle of radius eps.
inline int circle_points(double eps, double spacing) {
    return std::max(64, static_cast<int>(std::ceil(4.0 * std::numbers::pi * eps / spacing - 1e-9)));
}

/// Mean of the bilinear interpolant over K equispaced points; no domain
/// checks (the reflected extension is used outside D).
inline double circle_average_unchecked(const GridField& field, Point z, double eps) {
    const int k_points = circle_points(eps, field.grid.spacing);
    const auto& nodes = detail::circle_nodes(k_points);
    double s = 0.0;
    for (int k = 0; k < k_points; ++k) {
        s += field.interpolate({z.x + eps * nodes[2 * k], z.y + eps * nodes[2 * k + 1]});
    }
    return s / k_points;
}

/// Resolution and containment rules shared by every circle-based query.
inline void check_circle(const Grid& grid, Point z, double eps) {
    constexpr double kSlack = 1e-12;
    if (!(eps >= 2.0 * grid.spacing * (1.0 - kSlack))) {
        throw std::invalid_argument("circle radius " + std::to_string(eps) + " below resolution 2*spacing");
    }
    if (boundary_distance(z) < eps * (1.0 - kSlack)) {
        throw std::invalid_argument("circle of radius " + std::to_string(eps) + " leaves the domain");
    }
}

inline CircleAverage circle_average(const GridField& field, Point z, double eps) {
    check_circle(field.grid, z, eps);
    return {z, eps, circle_average_unchecked(field, z, eps)};
}

/// Circle averages at every cell centre for one radius, computed exactly for
/// the trigonometric interpolant: each mode is multiplied by J0(k eps).
/// Outside-domain parts of the circle see the reflected field.
class SpectralCircleAverager {
public:
    SpectralCircleAverager(const Grid& grid, double eps) : grid_(grid), eps_(eps), multiplier_(grid.size()) {
        const int n = grid.n;
        const double norm = 1.0 / (4.0 * n * static_cast<double>(n));
        for (int q = 0; q < n; ++q) {
            const double kq = std::numbers::pi * detail::mode_of(q, grid.bc);
            for (int p = 0; p < n; ++p) {
                const double kp = std::numbers::pi * detail::mode_of(p, grid.bc);
                multiplier_[grid.index(p, q)] = norm * std::cyl_bessel_j(0.0, eps * std::hypot(kp, kq));
            }
        }
    }

    double eps() const { return eps_; }

    GridField apply(const GridField& field) const {
        if (!(field.grid == grid_)) throw std::invalid_argument("SpectralCircleAverager: grid mismatch");
        GridField out = field;
        const bool dir = grid_.bc == BoundaryCondition::dirichlet;
        spectral::transform(out.values, grid_.n, dir ? spectral::Kind::sine_analysis : spectral::Kind::cosine_analysis);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= multiplier_[i];
        spectral::transform(out.values, grid_.n, dir ? spectral::Kind::sine_synthesis : spectral::Kind::cosine_synthesis);
        return out;
    }

private:
    Grid grid_;
    double eps_;
    std::vector<double> multiplier_;
};

// ---------------------------------------------------------------------------
// Conformal radius of the unit square.
//
// Start from the strip 0 < x < 1, whose conformal radius is (2/pi) sin(pi x),
// and subtract the harmonic correction imposed by the edges y = 0 and y = 1.
// Expanding the strip and square Green functions in sin(m pi x) gives the
// diagonal correction
//   H = sum_m (2/m) sin^2(m pi x) [e^{-2 pi m y} + e^{-2 pi m (1-y)} - 2 e^{-2 pi m}] / (1 - e^{-2 pi m}),
// so log C = log((2/pi) sin(pi x)) - H. The orientation is chosen so that y
// is the coordinate farther from its edges, which makes the series converge
// geometrically at rate e^{-2 pi m dist}.
// ---------------------------------------------------------------------------

inline double log_conformal_radius(Point z) {
    if (!(boundary_distance(z) > 0.0)) throw std::invalid_argument("conformal radius undefined on or outside the boundary");
    double x = std::fmin(z.x, 1.0 - z.x);
    double y = std::fmin(z.y, 1.0 - z.y);
    if (y < x) std::swap(x, y);
    const double pi = std::numbers::pi;
    double h = 0.0;
    for (int m = 1;; ++m) {
        const double decay = std::exp(-2.0 * pi * m * y);
        const double s = std::sin(m * pi * x);
        const double far = std::exp(-2.0 * pi * m * (1.0 - y));
        const double both = std::exp(-2.0 * pi * m);
        h += (2.0 / m) * s * s * (decay + far - 2.0 * both) / (1.0 - both);
        if (2.0 * decay / m < 1e-18) break;
    }
    return std::log(2.0 / pi * std::sin(pi * x)) - h;
}

inline double conformal_radius(Point z) { return std::exp(log_conformal_radius(z)); }

struct GreenTable {
    Grid grid;
    std::vector<double> conformal_radius;  // NaN at unusable sites
    double normalization = 0.0;             // measured intercept offset of the variance law

    /// Sites within 2*spacing of the boundary are not usable.
    bool usable(int i, int j) const { return !std::isnan(conformal_radius[grid.index(i, j)]); }
    double at(int i, int j) const { return conformal_radius[grid.index(i, j)]; }
};

inline GreenTable build_green_table(const Grid& grid) {
    if (grid.bc != BoundaryCondition::dirichlet) throw std::invalid_argument("build_green_table: grid must be Dirichlet");
    GreenTable t{grid, std::vector<double>(grid.size(), std::numeric_limits<double>::quiet_NaN()), 0.0};
    const int n = grid.n;
    const int half = n / 2;
    // Evaluate on the fundamental triangle i <= j < n/2 and copy to the eight
    // symmetric images, so symmetry holds bit for bit.
    for (int j = 0; j < half; ++j) {
        for (int i = 0; i <= j; ++i) {
            const Point c = grid.center(i, j);
            if (boundary_distance(c) < 2.0 * grid.spacing) continue;
            const double value = conformal_radius(c);
            const int is[2] = {i, n - 1 - i};
            const int js[2] = {j, n - 1 - j};
            for (int a : is)
                for (int b : js) {
                    t.conformal_radius[grid.index(a, b)] = value;
                    t.conformal_radius[grid.index(b, a)] = value;
                }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Ensemble statistics of circle averages at a fixed centre.
// ---------------------------------------------------------------------------

struct VarianceLaw {
    Point z;
    std::vector<double> eps;
    std::vector<stats::Moments> per_eps;            // moments of h_eps(z)
    std::vector<std::vector<double>> diff_variance; // Var[h_eps_a - h_eps_b], symmetric
    std::vector<std::vector<double>> diff_stderr;
    double slope = 0.0;      // fit of Var h_eps against -log eps
    double intercept = 0.0;
    double expected_intercept = 0.0;  // log C(z; D) for Dirichlet
    double normalization = 0.0;       // intercept - expected_intercept
    double mean_quadratic_variation = 0.0;  // ensemble mean of sum (h_{k+1} - h_k)^2
};

/// Circle-average samples [site][field][eps] for an ensemble of fields; each
/// field is sampled once and averaged at every site.
template <class Sampler, class Averager>
std::vector<std::vector<std::vector<double>>> site_ensemble(const Grid& grid, std::uint64_t seed, std::size_t n_fields,
                                                            std::size_t n_sites, std::span<const double> eps,
                                                            Sampler&& sample, Averager&& average,
                                                            unsigned workers = worker_count()) {
    std::vector<std::vector<std::vector<double>>> out(
        n_sites, std::vector<std::vector<double>>(n_fields, std::vector<double>(eps.size())));
    parallel_for(
        n_fields,
        [&](std::size_t f) {
            const GridField field = sample(grid, field_seed(seed, f));
            for (std::size_t s = 0; s < n_sites; ++s)
                for (std::size_t k = 0; k < eps.size(); ++k) out[s][f][k] = average(field, s, eps[k]);
        },
        workers);
    return out;
}

inline VarianceLaw summarize_variance_law(Point z, std::span<const double> eps,
                                          const std::vector<std::vector<double>>& samples,
                                          std::optional<double> expected_intercept) {
    VarianceLaw law;
    law.z = z;
    law.eps.assign(eps.begin(), eps.end());
    const std::size_t m = eps.size();
    const std::size_t n = samples.size();
    std::vector<double> column(n);
    std::vector<double> logs, vars;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t f = 0; f < n; ++f) column[f] = samples[f][k];
        law.per_eps.push_back(stats::moments(column));
        logs.push_back(-std::log(eps[k]));
        vars.push_back(law.per_eps.back().variance);
    }
    law.diff_variance.assign(m, std::vector<double>(m, 0.0));
    law.diff_stderr.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            for (std::size_t f = 0; f < n; ++f) column[f] = samples[f][a] - samples[f][b];
            const auto mom = stats::moments(column);
            law.diff_variance[a][b] = law.diff_variance[b][a] = mom.variance;
            law.diff_stderr[a][b] = law.diff_stderr[b][a] = mom.stderr_variance();
        }
    }
    if (m >= 2) {
        const auto fit = stats::linear_fit(logs, vars);
        law.slope = fit.slope;
        law.intercept = fit.intercept;
    }
    if (expected_intercept) {
        law.expected_intercept = *expected_intercept;
        law.normalization = law.intercept - *expected_intercept;
    }
    double qv = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
        for (std::size_t k = 0; k + 1 < m; ++k) {
            const double d = samples[f][k + 1] - samples[f][k];
            qv += d * d;
        }
    }
    law.mean_quadratic_variation = n > 0 ? qv / static_cast<double>(n) : 0.0;
    return law;
}

/// Variance laws of Dirichlet circle averages at several centres, sharing
/// one ensemble of fields.
inline std::vector<VarianceLaw> measure_variance_laws(const Grid& grid, std::span<const Point> sites,
                                                      std::span<const double> eps, std::size_t n_fields,
                                                      std::uint64_t seed, unsigned workers = worker_count()) {
    for (Point z : sites)
        for (double e : eps) check_circle(grid, z, e);
    const auto samples = site_ensemble(
        grid, seed, n_fields, sites.size(), eps, [](const Grid& g, std::uint64_t s) { return sample_gff(g, s); },
        [&](const GridField& f, std::size_t s, double e) { return circle_average_unchecked(f, sites[s], e); }, workers);
    std::vector<VarianceLaw> laws;
    for (std::size_t s = 0; s < sites.size(); ++s)
        laws.push_back(summarize_variance_law(sites[s], eps, samples[s], log_conformal_radius(sites[s])));
    return laws;
}

inline VarianceLaw measure_variance_law(const Grid& grid, Point z, std::span<const double> eps, std::size_t n_fields,
                                        std::uint64_t seed, unsigned workers = worker_count()) {
    return measure_variance_laws(grid, std::span<const Point>(&z, 1), eps, n_fields, seed, workers).front();
}

/// Variance slope averaged over sites, with the spread of the per-site slopes.
struct PooledSlope {
    double slope = 0.0;
    double site_stderr = 0.0;  // stderr over sites, ignoring their correlation
    std::size_t n_sites = 0;
};

inline PooledSlope pooled_slope(std::span<const VarianceLaw> laws) {
    std::vector<double> slopes;
    for (const auto& l : laws) slopes.push_back(l.slope);
    const auto m = stats::moments(slopes);
    return {m.mean, m.stderr_mean(), slopes.size()};
}

}  // namespace lqg
