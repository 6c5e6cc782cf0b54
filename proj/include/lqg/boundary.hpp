#pragma once

// Free-boundary field, semicircle averages on the edges of the square, the
// boundary quantum length eps^{gamma^2/4} e^{gamma h_eps / 2} ds, and the
// boundary analogue of the KPZ estimators. A boundary "ball" of length delta
// is the arc around z whose boundary mass is delta.

#include <algorithm>
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

#include "lqg/fractal.hpp"
#include "lqg/gff.hpp"
#include "lqg/measure.hpp"
#include "lqg/parallel.hpp"
#include "lqg/random.hpp"
#include "lqg/stats.hpp"

namespace lqg {

/// Free-boundary GFF (cosine modes, constant mode removed, spatial mean 0).
inline GridField sample_free_gff(const Grid& grid, std::uint64_t seed) {
    if (grid.bc != BoundaryCondition::free) throw std::invalid_argument("sample_free_gff: grid must be free");
    return detail::synthesize(grid, seed);
}

enum class Edge { bottom, right, top, left };

inline const char* to_string(Edge e) {
    switch (e) {
        case Edge::bottom: return "bottom";
        case Edge::right: return "right";
        case Edge::top: return "top";
        case Edge::left: return "left";
    }
    return "?";
}

inline Edge edge_from_string(const std::string& s) {
    if (s == "bottom") return Edge::bottom;
    if (s == "right") return Edge::right;
    if (s == "top") return Edge::top;
    if (s == "left") return Edge::left;
    throw std::invalid_argument("unknown edge '" + s + "'");
}

inline constexpr double kCornerMargin = 1.0 / 16.0;

/// Point at arclength parameter s in [0, 1] along an edge.
inline Point edge_point(Edge e, double s) {
    switch (e) {
        case Edge::bottom: return {s, 0.0};
        case Edge::right: return {1.0, s};
        case Edge::top: return {s, 1.0};
        case Edge::left: return {0.0, s};
    }
    return {};
}

namespace detail {

struct EdgeFrame {
    Point tangent, normal;  // normal points into D
};

inline EdgeFrame edge_frame(Edge e) {
    switch (e) {
        case Edge::bottom: return {{1.0, 0.0}, {0.0, 1.0}};
        case Edge::right: return {{0.0, 1.0}, {-1.0, 0.0}};
        case Edge::top: return {{1.0, 0.0}, {0.0, -1.0}};
        case Edge::left: return {{0.0, 1.0}, {1.0, 0.0}};
    }
    return {};
}

/// Half-circle nodes at angles pi (k + 1/2) / K, cached per K and thread.
inline const std::vector<double>& semicircle_nodes(int k_points) {
    thread_local std::map<int, std::vector<double>> cache;
    auto it = cache.find(k_points);
    if (it != cache.end()) return it->second;
    std::vector<double> nodes(2 * static_cast<std::size_t>(k_points));
    for (int k = 0; k < k_points; ++k) {
        const double t = std::numbers::pi * (k + 0.5) / k_points;
        nodes[2 * k] = std::cos(t);
        nodes[2 * k + 1] = std::sin(t);
    }
    return cache.emplace(k_points, std::move(nodes)).first->second;
}

}  // namespace detail

inline int semicircle_points(double eps, double spacing) { return (circle_points(eps, spacing) + 1) / 2; }

/// Mean over the half-circle of radius eps inside D around the boundary point
/// at parameter s of the edge; no corner checks.
inline double semicircle_average_unchecked(const GridField& field, Edge e, double s, double eps) {
    const Point z = edge_point(e, s);
    const auto fr = detail::edge_frame(e);
    const int k_points = semicircle_points(eps, field.grid.spacing);
    const auto& nodes = detail::semicircle_nodes(k_points);
    double sum = 0.0;
    for (int k = 0; k < k_points; ++k) {
        const double c = eps * nodes[2 * k], v = eps * nodes[2 * k + 1];
        sum += field.interpolate({z.x + c * fr.tangent.x + v * fr.normal.x, z.y + c * fr.tangent.y + v * fr.normal.y});
    }
    return sum / k_points;
}

inline void check_semicircle(const Grid& grid, double s, double eps) {
    constexpr double kSlack = 1e-12;
    if (!(eps >= 2.0 * grid.spacing * (1.0 - kSlack))) {
        throw std::invalid_argument("semicircle radius " + std::to_string(eps) + " below resolution 2*spacing");
    }
    const double corner = std::fmin(s, 1.0 - s);
    if (corner < kCornerMargin * (1.0 - kSlack) || corner < eps * (1.0 - kSlack)) {
        throw std::invalid_argument("semicircle at s=" + std::to_string(s) + " too close to a corner");
    }
    if (eps > 0.5) throw std::invalid_argument("semicircle radius too large");
}

inline double semicircle_average(const GridField& field, Edge e, double s, double eps) {
    check_semicircle(field.grid, s, eps);
    return semicircle_average_unchecked(field, e, s, eps);
}

/// Variance laws of semicircle averages at boundary points (e, s) for each s,
/// sharing one ensemble of free fields.
inline std::vector<VarianceLaw> measure_boundary_variance_laws(const Grid& grid, Edge e, std::span<const double> s_list,
                                                               std::span<const double> eps, std::size_t n_fields,
                                                               std::uint64_t seed, unsigned workers = worker_count()) {
    for (double s : s_list)
        for (double r : eps) check_semicircle(grid, s, r);
    const auto samples = site_ensemble(
        grid, seed, n_fields, s_list.size(), eps, [](const Grid& g, std::uint64_t sd) { return sample_free_gff(g, sd); },
        [&](const GridField& f, std::size_t k, double r) { return semicircle_average_unchecked(f, e, s_list[k], r); },
        workers);
    std::vector<VarianceLaw> laws;
    for (std::size_t k = 0; k < s_list.size(); ++k)
        laws.push_back(summarize_variance_law(edge_point(e, s_list[k]), eps, samples[k], std::nullopt));
    return laws;
}

inline VarianceLaw measure_boundary_variance_law(const Grid& grid, Edge e, double s, std::span<const double> eps,
                                                 std::size_t n_fields, std::uint64_t seed,
                                                 unsigned workers = worker_count()) {
    return measure_boundary_variance_laws(grid, e, std::span<const double>(&s, 1), eps, n_fields, seed, workers).front();
}

/// 2 eps^{1 + gamma^2/4} exp(gamma h / 2): boundary length of the arc of radius eps.
inline double arc_mass_from_average(double gamma, double eps, double h_eps) {
    if (gamma == 0.0) return 2.0 * eps;
    return 2.0 * std::pow(eps, 1.0 + gamma * gamma / 4.0) * std::exp(gamma * h_eps / 2.0);
}

/// Boundary masses of the n cells of one edge. The field is referenced.
struct BoundaryDensity {
    const GridField* field = nullptr;
    Edge edge = Edge::bottom;
    double gamma = 0.0;
    double eps = 0.0;
    std::vector<double> masses;

    double total() const {
        double s = 0.0;
        for (double m : masses) s += m;
        return s;
    }
};

inline BoundaryDensity make_boundary_density(const GridField& field, Edge e, double gamma, double eps) {
    if (field.grid.bc != BoundaryCondition::free) throw std::invalid_argument("boundary density: field must be free");
    if (!(gamma >= 0.0)) throw std::invalid_argument("boundary density: gamma must be >= 0");
    const int n = field.grid.n;
    const double h = field.grid.spacing;
    BoundaryDensity d{&field, e, gamma, eps, std::vector<double>(n)};
    if (gamma == 0.0) {
        std::fill(d.masses.begin(), d.masses.end(), h);
        return d;
    }
    const double reg = std::pow(eps, gamma * gamma / 4.0);
    for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) * h;
        d.masses[i] = reg * std::exp(gamma * semicircle_average_unchecked(field, e, s, eps) / 2.0) * h;
    }
    return d;
}

/// Draws boundary parameters s with probability proportional to the density
/// restricted to cells whose centre lies in the window.
class BoundaryPointSampler {
public:
    BoundaryPointSampler(const BoundaryDensity& density, Window window) : spacing_(density.field->grid.spacing) {
        const int n = density.field->grid.n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double s = (i + 0.5) * spacing_;
            if (s < window.lo || s > window.hi) continue;
            acc += density.masses[i];
            cells_.push_back(i);
            cumulative_.push_back(acc);
        }
        if (cells_.empty() || !(acc > 0.0)) throw std::invalid_argument("BoundaryPointSampler: empty window");
    }

    double draw(Philox4x32& rng) const {
        const double u = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        const int i = cells_[static_cast<std::size_t>(it - cumulative_.begin())];
        return (i + rng.uniform()) * spacing_;
    }

private:
    double spacing_;
    std::vector<int> cells_;
    std::vector<double> cumulative_;
};

/// Arc masses down the ladder at boundary parameter s; arcs stay on the edge.
inline std::vector<ScanPoint> scan_arc_masses(const GridField& field, Edge e, double gamma, double s,
                                              const LadderOptions& opt, double stop_mass) {
    const double floor = 2.0 * field.grid.spacing;
    const double limit = std::fmin(opt.eps_max, std::fmin(s, 1.0 - s));
    std::vector<ScanPoint> trace;
    for (double eps : ladder_rungs(opt, limit, floor)) {
        const double m = arc_mass_from_average(gamma, eps, semicircle_average_unchecked(field, e, s, eps));
        trace.push_back({eps, m});
        if (m <= stop_mass) break;
    }
    return trace;
}

inline QuantumBallResult boundary_ball_radius(const GridField& field, Edge e, double gamma, double s, double delta,
                                              const LadderOptions& opt = {}) {
    auto trace = scan_arc_masses(field, e, gamma, s, opt, delta);
    QuantumBallResult r = resolve_ball(edge_point(e, s), delta, trace);
    r.trace = std::move(trace);
    return r;
}

// ---------------------------------------------------------------------------
// Boundary fractals: subsets of one edge, stored as cell positions along it.
// ---------------------------------------------------------------------------

struct BoundaryMask {
    Grid grid;
    Edge edge = Edge::bottom;
    std::vector<int> cells;  // sorted; occupied parameters s = (i + 1/2) h
    MaskKind kind = MaskKind::point;
    std::optional<double> known_x;

    double position(std::size_t k) const { return (cells[k] + 0.5) * grid.spacing; }

    /// Distance along the edge from parameter s to the set.
    double distance(double s) const {
        const double u = s / grid.spacing - 0.5;
        auto it = std::lower_bound(cells.begin(), cells.end(), u, [](int c, double v) { return c < v; });
        double best = std::numeric_limits<double>::infinity();
        if (it != cells.end()) best = std::fabs((*it + 0.5) * grid.spacing - s);
        if (it != cells.begin()) best = std::fmin(best, std::fabs((*(it - 1) + 0.5) * grid.spacing - s));
        return best;
    }
};

/// Point (middle of the edge) or middle-thirds Cantor set on [margin, 1 - margin].
inline BoundaryMask make_boundary_fractal(MaskKind kind, const FractalParams& params, const Grid& grid,
                                          Edge edge = Edge::bottom) {
    BoundaryMask m;
    m.grid = grid;
    m.edge = edge;
    m.kind = kind;
    const int n = grid.n;
    switch (kind) {
        case MaskKind::point:
            m.cells.push_back(n / 2);
            m.known_x = 1.0;
            break;
        case MaskKind::cantor_dust: {
            if (params.depth < 3) throw std::invalid_argument("boundary cantor: depth must be >= 3");
            const double lo = params.margin, side = 1.0 - 2.0 * params.margin;
            if (side / std::pow(3.0, params.depth) < grid.spacing) {
                throw std::invalid_argument("boundary cantor: depth " + std::to_string(params.depth) +
                                            " not resolvable on n=" + std::to_string(n));
            }
            for (int i = 0; i < n; ++i)
                if (detail::in_cantor(((i + 0.5) * grid.spacing - lo) / side, params.depth)) m.cells.push_back(i);
            m.known_x = 1.0 - std::log(2.0) / std::log(3.0);
            break;
        }
        default:
            throw std::invalid_argument(std::string("boundary masks support point and cantor_dust, not ") + to_string(kind));
    }
    for (std::size_t k = 0; k < m.cells.size(); ++k) {
        const double s = m.position(k);
        if (std::fmin(s, 1.0 - s) < params.margin - 1e-12) throw std::invalid_argument("boundary mask violates the margin");
    }
    return m;
}

/// Box-counting dimension along the edge with intervals of the given lengths.
inline BoxCount box_count(const BoundaryMask& mask, std::span<const double> sides, double origin = 0.0) {
    if (sides.size() < 2) throw std::invalid_argument("box_count: need >= 2 box sizes");
    BoxCount bc;
    std::vector<double> lx, ly;
    for (double s : sides) {
        std::vector<std::int64_t> keys;
        for (std::size_t k = 0; k < mask.cells.size(); ++k)
            keys.push_back(static_cast<std::int64_t>(std::floor((mask.position(k) - origin) / s)));
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

/// x~ from P{arc_eps(s) meets X} ~ eps^{x~}, s uniform on the edge away
/// from the corners; bootstrap over samples. On a line the exponent is one
/// minus the dimension, and with arcs weighted by the boundary measure the
/// pair (x~, Delta~) satisfies the same KPZ relation as in the bulk.
inline ExponentEstimate boundary_euclidean_exponent(const BoundaryMask& mask, std::span<const double> eps_ladder,
                                                    const EuclideanOptions& opt = {}) {
    for (double e : eps_ladder) {
        if (!(e >= 2.0 * mask.grid.spacing * (1.0 - 1e-12))) {
            throw std::invalid_argument("boundary_euclidean_exponent: eps " + std::to_string(e) + " below resolution");
        }
    }
    Philox4x32 rng(opt.seed, 0);
    std::vector<double> d(opt.n_samples);
    for (auto& v : d) v = mask.distance(kCornerMargin + (1.0 - 2.0 * kCornerMargin) * rng.uniform());
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
    detail::finish_estimate(est, eps_ladder, keep, hits, trials, 1.0);
    std::vector<double> reps;
    Philox4x32 boot(opt.seed, 1);
    const std::vector<double> tr(R, static_cast<double>(opt.n_samples));
    for (int b = 0; b < opt.n_boot; ++b) {
        std::vector<std::uint32_t> pick(d.size());
        for (auto& p : pick) p = static_cast<std::uint32_t>(boot.uniform() * static_cast<double>(d.size()));
        const auto h = count([&](std::size_t s) { return pick[s]; });
        reps.push_back(detail::slope_of(eps_ladder, keep, h, tr));
    }
    est.std_error = detail::bootstrap_stderr(reps);
    return est;
}

/// Delta~-hat for boundary masks on a common edge: s drawn from the boundary
/// measure of each free field, arcs of boundary length delta solved on the
/// ladder, intersection by distance along the edge. Bootstrap over fields.
inline std::vector<ExponentEstimate> boundary_quantum_exponents(std::span<const BoundaryMask> masks, double gamma,
                                                                std::span<const double> delta_ladder,
                                                                const QuantumOptions& opt) {
    if (masks.empty()) throw std::invalid_argument("boundary_quantum_exponents: no masks");
    if (!(gamma >= 0.0 && gamma < 2.0)) throw std::invalid_argument("boundary_quantum_exponents: requires 0 <= gamma < 2");
    const Grid grid = masks.front().grid;
    const Edge edge = masks.front().edge;
    if (grid.bc != BoundaryCondition::free) throw std::invalid_argument("boundary_quantum_exponents: grid must be free");
    for (const auto& m : masks)
        if (!(m.grid == grid) || m.edge != edge) throw std::invalid_argument("boundary masks must share grid and edge");
    if (opt.window.lo < kCornerMargin || opt.window.hi > 1.0 - kCornerMargin) {
        throw std::invalid_argument("boundary window must respect the corner margin");
    }
    const double eps_density = opt.eps_density > 0.0 ? opt.eps_density : 2.0 * grid.spacing;
    const double min_delta = *std::min_element(delta_ladder.begin(), delta_ladder.end());
    const std::size_t R = delta_ladder.size();
    std::vector<std::vector<RungCounts>> per_field(opt.n_fields, std::vector<RungCounts>(masks.size(), RungCounts(R)));
    parallel_for(
        opt.n_fields,
        [&](std::size_t f) {
            const std::uint64_t fs = field_seed(opt.seed, f);
            const GridField field = sample_free_gff(grid, fs);
            const BoundaryDensity density = make_boundary_density(field, edge, gamma, eps_density);
            const BoundaryPointSampler sampler(density, opt.window);
            Philox4x32 rng(fs, 2);
            std::vector<double> d(masks.size());
            for (std::size_t p = 0; p < opt.n_points; ++p) {
                const double s = sampler.draw(rng);
                const auto trace = scan_arc_masses(field, edge, gamma, s, opt.ladder, min_delta);
                for (std::size_t m = 0; m < masks.size(); ++m) d[m] = masks[m].distance(s);
                for (std::size_t k = 0; k < R; ++k) {
                    const QuantumBallResult r = resolve_ball(edge_point(edge, s), delta_ladder[k], trace);
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

/// Boundary verification table: one row per (mask, gamma).
inline std::vector<KpzRow> boundary_kpz_verify(std::span<const BoundaryMask> masks, std::span<const double> gammas,
                                               std::span<const double> eps_ladder, std::span<const double> delta_ladder,
                                               const EuclideanOptions& eopt, const QuantumOptions& qopt) {
    std::vector<ExponentEstimate> euclid;
    for (const auto& m : masks) euclid.push_back(boundary_euclidean_exponent(m, eps_ladder, eopt));
    std::vector<KpzRow> rows;
    for (double gamma : gammas) {
        const auto quantum = boundary_quantum_exponents(masks, gamma, delta_ladder, qopt);
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
