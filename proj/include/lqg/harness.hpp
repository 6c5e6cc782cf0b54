#pragma once

// Experiment runner: dispatches a config to the compute modules, writes CSV
// tables, a JSON summary and a manifest, and evaluates the checks that decide
// the exit status.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqg/boundary.hpp"
#include "lqg/brownian.hpp"
#include "lqg/config.hpp"
#include "lqg/fractal.hpp"
#include "lqg/gff.hpp"
#include "lqg/kpz.hpp"
#include "lqg/mask_io.hpp"
#include "lqg/measure.hpp"
#include "lqg/parallel.hpp"

#ifndef LQG_VERSION
#define LQG_VERSION "0.0.0"
#endif

namespace lqg {

using json = nlohmann::json;

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(serialize_config(c))); }

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool gated = false;
    bool passed = false;
    std::string detail;
};

struct DroppedItem {
    std::string item;
    std::string code;
    std::string detail;
};

struct FileEntry {
    std::string name;
    std::uintmax_t bytes = 0;
    std::string fnv1a;
};

struct RunManifest {
    std::string experiment;
    std::string config_hash;
    std::string version = LQG_VERSION;
    std::string started;
    std::string finished;
    unsigned workers = 1;
    std::vector<FileEntry> files;
    std::vector<DroppedItem> dropped;
    std::vector<Check> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (c.gated && !c.passed) return false;
        return true;
    }
};

enum ExitCode { kExitPass = 0, kExitGatedFailure = 1, kExitUsage = 2 };

namespace detail {

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Minimal CSV builder; values are formatted deterministically.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

    Csv& cell(const std::string& s) {
        pending_.push_back(s);
        return *this;
    }
    Csv& cell(const char* s) { return cell(std::string(s)); }
    Csv& cell(double v) { return cell(num(v)); }
    Csv& cell(std::size_t v) { return cell(std::to_string(v)); }
    Csv& cell(int v) { return cell(std::to_string(v)); }
    Csv& cell(bool v) { return cell(std::string(v ? "1" : "0")); }

    void end_row() {
        if (pending_.size() != columns_) throw std::logic_error("csv row width mismatch");
        row_strings(pending_);
        pending_.clear();
    }

    /// Append a row that was formatted elsewhere (parallel producers).
    void raw_row(const std::string& line) {
        text_ += line;
        text_ += '\n';
    }

    const std::string& str() const { return text_; }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    std::size_t columns_;
    std::vector<std::string> pending_;
    std::string text_;
};

}  // namespace detail

/// Output directory that records every file written through it.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) { std::filesystem::create_directories(root_); }

    const std::filesystem::path& root() const { return root_; }

    void write(const std::string& name, const std::string& content) {
        const auto path = root_ / name;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        out.close();
        record(name, content);
    }

    /// Register a file produced by another writer (binary dumps).
    void adopt(const std::string& name) {
        std::ifstream in(root_ / name, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        record(name, ss.str());
    }

    std::filesystem::path path(const std::string& name) const {
        const auto p = root_ / name;
        std::filesystem::create_directories(p.parent_path());
        return p;
    }

    const std::vector<FileEntry>& files() const { return files_; }

private:
    void record(const std::string& name, const std::string& content) {
        files_.push_back({name, content.size(), hex64(fnv1a64(content))});
    }

    std::filesystem::path root_;
    std::vector<FileEntry> files_;
};

struct RunContext {
    RunContext(const ExperimentConfig& c, OutputDir& o, unsigned w) : config(c), out(o), workers(w) {}

    const ExperimentConfig& config;
    OutputDir& out;
    unsigned workers;
    std::vector<Check> checks;
    std::vector<DroppedItem> dropped;
    json summary = json::object();

    void check(const std::string& name, double value, double threshold, bool passed, bool gated,
               const std::string& detail = "") {
        checks.push_back({name, value, threshold, gated, passed, detail});
    }
};

// ---------------------------------------------------------------------------
// kpz-table
// ---------------------------------------------------------------------------

inline void run_kpz_table(RunContext& ctx) {
    const auto& c = ctx.config;
    detail::Csv csv({"gamma", "x", "beta", "delta", "alpha", "gamma_str", "roundtrip_residual", "dual_delta_relation",
                     "dual_product", "dual_alpha_invariance", "dual_seiberg_excess", "dual_string_duality"});
    double worst_roundtrip = 0.0, worst_dual = 0.0, worst_fixed = 0.0;
    for (double gamma : c.gamma_list) {
        const auto g = GammaParams::from_gamma(gamma);
        for (double x : c.x_list) {
            const auto s = kpz_delta_of_x(g, x);
            const double rt = std::abs(kpz_x_of_delta(g, s.delta) - x) / std::max(1.0, x);
            const auto d = duality_report(g, x);
            worst_roundtrip = std::max(worst_roundtrip, rt);
            worst_dual = std::max(worst_dual, d.max_abs_residual());
            if (x == 1.0) worst_fixed = std::max(worst_fixed, std::abs(s.delta - 1.0));
            csv.cell(gamma).cell(x).cell(s.beta).cell(s.delta).cell(s.alpha).cell(g.gamma_str).cell(rt);
            csv.cell(d.delta_relation).cell(d.product).cell(d.alpha_invariance).cell(d.seiberg_excess).cell(d.string_duality);
            csv.end_row();
        }
    }
    ctx.out.write("kpz_table.csv", csv.str());
    ctx.check("roundtrip x(delta(x))", worst_roundtrip, 1e-12, worst_roundtrip <= 1e-12, true);
    ctx.check("duality residuals", worst_dual, 1e-10, worst_dual <= 1e-10, true);
    ctx.check("delta(1) = 1", worst_fixed, 1e-12, worst_fixed <= 1e-12, true);
    ctx.summary["rows"] = c.gamma_list.size() * c.x_list.size();
}

// ---------------------------------------------------------------------------
// gff-stats
// ---------------------------------------------------------------------------

/// Lattice sites 1/2 + k * step whose circles of radius 2 * max_eps fit in D.
inline std::vector<Point> pooling_sites(double step, double max_eps) {
    if (step <= 0.0) return {{0.5, 0.5}};
    std::vector<Point> sites;
    const int m = static_cast<int>(std::floor(0.5 / step + 1e-9));
    for (int j = -m; j <= m; ++j)
        for (int i = -m; i <= m; ++i) {
            const Point z{0.5 + i * step, 0.5 + j * step};
            if (boundary_distance(z) >= 2.0 * max_eps - 1e-12) sites.push_back(z);
        }
    return sites;
}

inline std::vector<double> pooling_edge_sites(double step, double max_eps) {
    if (step <= 0.0) return {0.5};
    std::vector<double> s;
    const int m = static_cast<int>(std::floor(0.5 / step + 1e-9));
    const double margin = std::max(kCornerMargin, 2.0 * max_eps);
    for (int i = -m; i <= m; ++i) {
        const double v = 0.5 + i * step;
        if (std::min(v, 1.0 - v) >= margin - 1e-12) s.push_back(v);
    }
    return s;
}

inline void run_gff_stats(RunContext& ctx) {
    const auto& c = ctx.config;
    const Grid grid(c.grid_n);
    const double max_eps = *std::max_element(c.eps_list.begin(), c.eps_list.end());
    const auto sites = pooling_sites(c.site_step, max_eps);
    const auto laws = measure_variance_laws(grid, sites, c.eps_list, c.n_fields, c.seed, ctx.workers);

    detail::Csv var({"x", "y", "eps", "mean", "variance", "variance_stderr", "expected"});
    for (const auto& law : laws) {
        for (std::size_t k = 0; k < law.eps.size(); ++k) {
            var.cell(law.z.x).cell(law.z.y).cell(law.eps[k]).cell(law.per_eps[k].mean).cell(law.per_eps[k].variance);
            var.cell(law.per_eps[k].stderr_variance()).cell(-std::log(law.eps[k]) + law.expected_intercept);
            var.end_row();
        }
    }
    ctx.out.write("variance_law.csv", var.str());

    // Increments at the centre.
    std::size_t centre = 0;
    for (std::size_t s = 0; s < sites.size(); ++s)
        if (sites[s].x == 0.5 && sites[s].y == 0.5) centre = s;
    const auto& cl = laws[centre];
    detail::Csv diff({"eps_a", "eps_b", "var_diff", "stderr", "expected", "rel_error"});
    double worst_rel = 0.0;
    for (std::size_t a = 0; a < cl.eps.size(); ++a) {
        for (std::size_t b = a + 1; b < cl.eps.size(); ++b) {
            const double expected = std::abs(std::log(cl.eps[a] / cl.eps[b]));
            const double rel = cl.diff_variance[a][b] / expected - 1.0;
            worst_rel = std::max(worst_rel, std::abs(rel));
            diff.cell(cl.eps[a]).cell(cl.eps[b]).cell(cl.diff_variance[a][b]).cell(cl.diff_stderr[a][b]).cell(expected).cell(rel);
            diff.end_row();
        }
    }
    ctx.out.write("variance_increments.csv", diff.str());
    const auto pooled = pooled_slope(laws);
    ctx.check("centre increment variance vs |log ratio| (relative)", worst_rel, 0.05, worst_rel <= 0.05, false);
    ctx.check("pooled variance slope - 1", std::abs(pooled.slope - 1.0), 0.02, std::abs(pooled.slope - 1.0) <= 0.02, false,
              std::to_string(pooled.n_sites) + " sites");
    ctx.summary["centre_slope"] = detail::num_json(cl.slope);
    ctx.summary["centre_normalization"] = detail::num_json(cl.normalization);
    ctx.summary["pooled_slope"] = detail::num_json(pooled.slope);
    ctx.summary["pooled_slope_site_stderr"] = detail::num_json(pooled.site_stderr);
    ctx.summary["n_sites"] = pooled.n_sites;

    if (c.boundary_fields > 0) {
        const Grid fgrid(c.grid_n, BoundaryCondition::free);
        const auto s_list = pooling_edge_sites(c.site_step, max_eps);
        const auto blaws = measure_boundary_variance_laws(fgrid, Edge::bottom, s_list, c.eps_list, c.boundary_fields,
                                                          mix_seed(c.seed, 0xB0), ctx.workers);
        detail::Csv bvar({"s", "eps", "mean", "variance", "variance_stderr"});
        for (std::size_t k = 0; k < blaws.size(); ++k) {
            for (std::size_t e = 0; e < blaws[k].eps.size(); ++e) {
                bvar.cell(s_list[k]).cell(blaws[k].eps[e]).cell(blaws[k].per_eps[e].mean).cell(blaws[k].per_eps[e].variance);
                bvar.cell(blaws[k].per_eps[e].stderr_variance());
                bvar.end_row();
            }
        }
        ctx.out.write("boundary_variance_law.csv", bvar.str());
        const auto bp = pooled_slope(blaws);
        ctx.check("pooled boundary variance slope - 2", std::abs(bp.slope - 2.0), 0.2, std::abs(bp.slope - 2.0) <= 0.2, false,
                  std::to_string(bp.n_sites) + " edge sites");
        ctx.summary["boundary_pooled_slope"] = detail::num_json(bp.slope);
        ctx.summary["boundary_pooled_slope_site_stderr"] = detail::num_json(bp.site_stderr);
        ctx.summary["boundary_slope_ratio"] = detail::num_json(bp.slope / pooled.slope);
    }

    for (std::size_t f = 0; f < c.dump_fields; ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "fields/field_%04zu.lqgf", f);
        io::write_field(ctx.out.path(name).string(), sample_gff(grid, field_seed(c.seed, f)));
        ctx.out.adopt(name);
    }
}

// ---------------------------------------------------------------------------
// measure-scan
// ---------------------------------------------------------------------------

inline void run_measure_scan(RunContext& ctx) {
    const auto& c = ctx.config;
    const Grid grid(c.grid_n);
    const Point centre{0.5, 0.5};
    detail::Csv dens({"gamma", "eps", "mean_mass", "stderr", "expected", "ratio", "ratio_stderr"});
    detail::Csv balls({"gamma", "field", "z_x", "z_y", "delta", "eps", "hit", "status"});
    json per_gamma = json::array();
    for (double gamma : c.gamma_list) {
        const auto d = expected_density_at(grid, gamma, centre, c.eps_list, c.n_fields, mix_seed(c.seed, 0xD0), ctx.workers);
        for (std::size_t k = 0; k < d.eps.size(); ++k) {
            const double m = d.mass[k].mean, se = d.mass[k].stderr_mean();
            dens.cell(gamma).cell(d.eps[k]).cell(m).cell(se).cell(d.expected).cell(m / d.expected).cell(se / d.expected);
            dens.end_row();
        }
        // Largest radius is the best resolved; the first and last radii are compared.
        std::size_t best = 0;
        for (std::size_t k = 1; k < d.eps.size(); ++k)
            if (d.eps[k] > d.eps[best]) best = k;
        const double ratio = d.mass[best].mean / d.expected;
        ctx.check("mean M_eps(centre) / C^{gamma^2/2} - 1 at gamma=" + detail::num(gamma) + ", eps=" + detail::num(d.eps[best]),
                  std::abs(ratio - 1.0), 0.05, std::abs(ratio - 1.0) <= 0.05, false);
        if (d.eps.size() >= 2) {
            const auto& a = d.mass.front();
            const auto& b = d.mass.back();
            const double combined = std::hypot(a.stderr_mean(), b.stderr_mean());
            const double zs = combined > 0.0 ? std::abs(a.mean - b.mean) / combined : 0.0;
            ctx.check("mean M_eps(centre) across eps at gamma=" + detail::num(gamma) + " (combined SE units)", zs, 3.0,
                      zs <= 3.0, false);
        }
        per_gamma.push_back({{"gamma", gamma}, {"expected", d.expected}, {"ratio_best", detail::num_json(ratio)}});

        // Quantum balls around points drawn from the quantum measure.
        const SpectralCircleAverager averager(grid, c.eps_density > 0.0 ? c.eps_density : 2.0 * grid.spacing);
        const LadderOptions ladder{c.eps_max};
        const std::size_t n_scan = c.n_samples;
        std::vector<std::vector<std::string>> rows(n_scan);
        std::vector<std::size_t> unresolved(n_scan, 0);
        parallel_for(
            n_scan,
            [&](std::size_t f) {
                const std::uint64_t fs = field_seed(c.seed, f);
                const GridField field = sample_gff(grid, fs);
                const QuantumDensity density = make_quantum_density(field, gamma, averager);
                const QuantumPointSampler sampler(density, Window{c.window_lo, c.window_hi});
                Philox4x32 rng(fs, 3);
                const double min_delta = *std::min_element(c.delta_list.begin(), c.delta_list.end());
                for (std::size_t p = 0; p < c.n_points; ++p) {
                    const Point z = sampler.draw(rng);
                    const auto trace = scan_ball_masses(field, gamma, z, ladder, min_delta);
                    for (double delta : c.delta_list) {
                        const auto r = resolve_ball(z, delta, trace);
                        if (!r.hit) ++unresolved[f];
                        std::vector<std::string> row{detail::num(gamma), std::to_string(f), detail::num(z.x), detail::num(z.y),
                                                     detail::num(delta), detail::num(r.eps), r.hit ? "1" : "0", to_string(r.status)};
                        std::string line;
                        for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "," : "") + row[i];
                        rows[f].push_back(std::move(line));
                    }
                }
            },
            ctx.workers);
        std::size_t total_unresolved = 0;
        for (std::size_t f = 0; f < n_scan; ++f) {
            for (const auto& line : rows[f]) balls.raw_row(line);
            total_unresolved += unresolved[f];
        }
        if (total_unresolved > 0) {
            ctx.dropped.push_back({"measure-scan/gamma=" + detail::num(gamma), "unresolved",
                                   std::to_string(total_unresolved) + " (z, delta) balls outside the ladder range"});
        }
        for (std::size_t f = 0; f < c.dump_fields; ++f) {
            const GridField field = sample_gff(grid, field_seed(c.seed, f));
            const QuantumDensity density = make_quantum_density(field, gamma, averager);
            GridField out(grid, field.seed);
            out.values = density.masses;
            char name[64];
            std::snprintf(name, sizeof name, "density/gamma_%s_field_%04zu.lqgf", detail::num(gamma).c_str(), f);
            io::write_field(ctx.out.path(name).string(), out);
            ctx.out.adopt(name);
        }
    }
    ctx.out.write("density_check.csv", dens.str());
    ctx.out.write("quantum_balls.csv", balls.str());
    ctx.summary["density"] = per_gamma;
}

// ---------------------------------------------------------------------------
// fpt-run
// ---------------------------------------------------------------------------

/// Martingale gate: every |z| <= 4 and at most one in twelve cells above 3.
inline bool martingale_gate(const std::vector<double>& z_scores) {
    std::size_t above3 = 0;
    for (double z : z_scores) {
        if (!(std::abs(z) <= 4.0)) return false;
        if (std::abs(z) > 3.0) ++above3;
    }
    return above3 <= z_scores.size() / 12;
}

inline void run_fpt(RunContext& ctx) {
    const auto& c = ctx.config;
    detail::Csv mart({"gamma", "A", "x", "beta", "value", "stderr", "closed_form", "z_score", "hit_rate", "hit_rate_stderr",
                      "n_paths"});
    detail::Csv dual({"gamma", "A", "x", "conditional", "stderr", "prediction", "z_score"});
    detail::Csv dens({"gamma", "A", "n_hits", "ks", "concentration", "mean_ratio"});
    detail::Csv lap({"gamma", "A", "x", "quadrature", "closed_form", "abs_error"});
    std::vector<double> zs;
    json records = json::array();
    double worst_laplace = 0.0;
    std::size_t cell = 0;
    for (double gamma : c.gamma_list) {
        const auto g = GammaParams::from_gamma(gamma);
        for (double A : c.a_list) {
            PathEnsembleOptions opt;
            opt.dt = c.dt;
            opt.t_max = c.t_max;
            opt.seed = mix_seed(c.seed, cell++);
            opt.passage.bridge_correction = c.bridge_correction;
            opt.passage.antithetic = c.antithetic;
            opt.workers = ctx.workers;
            const auto paths = simulate_paths(g, A, c.n_paths, opt);
            const auto est = martingale_estimates(g, c.x_list, A, paths, c.antithetic);
            for (const auto& e : est) {
                zs.push_back(e.z_score());
                mart.cell(gamma).cell(A).cell(e.x).cell(kpz_beta(g, e.x)).cell(e.value).cell(e.std_error).cell(e.closed_form);
                mart.cell(e.z_score()).cell(e.hit_rate).cell(e.hit_rate_stderr).cell(e.n_paths);
                mart.end_row();
                records.push_back({{"gamma", gamma}, {"A", A}, {"x", e.x}, {"value", e.value}, {"stderr", e.std_error},
                                   {"closed_form", e.closed_form}, {"z_score", e.z_score()}, {"hit_rate", e.hit_rate}});
            }
            std::size_t capped = 0;
            for (const auto& p : paths)
                if (p.status == PassageStatus::capped) ++capped;
            if (capped > 0) {
                ctx.dropped.push_back({"fpt-run/gamma=" + detail::num(gamma) + "/A=" + detail::num(A), "horizon",
                                       std::to_string(capped) + " paths reached t_max without a decision (counted as no hit)"});
            }
            if (gamma > 2.0) {
                const auto gd = GammaParams::from_gamma(g.gamma_dual);
                for (double x : c.x_list) {
                    const auto ce = conditional_on_hit(g, x, paths);
                    const double pred = std::exp(-g.gamma_dual * A * kpz_delta_of_x(gd, x).delta);
                    const double z = ce.std_error > 0.0 ? (ce.value - pred) / ce.std_error : 0.0;
                    dual.cell(gamma).cell(A).cell(x).cell(ce.value).cell(ce.std_error).cell(pred).cell(z);
                    dual.end_row();
                }
            } else {
                std::size_t hits = 0;
                for (const auto& p : paths) hits += p.hit;
                if (hits >= 1000) {
                    const auto fit = density_fit(paths, 0.0, 1000);
                    dens.cell(gamma).cell(A).cell(fit.n_hits).cell(fit.ks).cell(fit.concentration).cell(fit.mean_ratio);
                    dens.end_row();
                }
                for (double x : c.x_list) {
                    const double q = laplace_transform_quadrature(A, g.a, x);
                    const double cf = std::exp(-kpz_beta(g, x) * A);
                    worst_laplace = std::max(worst_laplace, std::abs(q - cf));
                    lap.cell(gamma).cell(A).cell(x).cell(q).cell(cf).cell(std::abs(q - cf));
                    lap.end_row();
                }
            }
            if (c.write_hit_times) {
                std::string text = "T\n";
                for (const auto& p : paths)
                    if (p.hit) text += detail::num(p.T) + "\n";
                ctx.out.write("hit_times/gamma_" + detail::num(gamma) + "_A_" + detail::num(A) + ".csv", text);
            }
        }
    }
    ctx.out.write("martingale.csv", mart.str());
    ctx.out.write("duality.csv", dual.str());
    ctx.out.write("passage_density.csv", dens.str());
    ctx.out.write("laplace_check.csv", lap.str());
    double worst = 0.0;
    for (double z : zs) worst = std::max(worst, std::abs(z));
    ctx.check("martingale identity |z| (all <= 4, at most 1/12 above 3)", worst, zs.size() < 12 ? 3.0 : 4.0,
              zs.size() < 12 ? worst <= 3.0 : martingale_gate(zs), true, std::to_string(zs.size()) + " cells");
    ctx.check("Laplace transform of the passage density", worst_laplace, 1e-6, worst_laplace <= 1e-6, true);
    ctx.summary["records"] = records;
}

// ---------------------------------------------------------------------------
// kpz-verify / boundary-verify
// ---------------------------------------------------------------------------

inline FractalParams fractal_params(const ExperimentConfig& c) {
    FractalParams p;
    p.depth = c.cantor_depth;
    p.walk_steps = c.walk_steps;
    p.seed = mix_seed(c.seed, 0x3A5C);
    return p;
}

inline QuantumOptions quantum_options(const ExperimentConfig& c, unsigned workers) {
    QuantumOptions q;
    q.n_fields = c.n_fields;
    q.n_points = c.n_points;
    q.seed = c.seed;
    q.ladder.eps_max = c.eps_max;
    q.eps_density = c.eps_density;
    q.window = {c.window_lo, c.window_hi};
    q.n_boot = c.n_boot;
    q.max_undetermined = c.max_undetermined;
    q.workers = workers;
    return q;
}

inline void report_kpz_rows(RunContext& ctx, const std::vector<KpzRow>& rows, const std::string& edge) {
    const auto& c = ctx.config;
    const std::string prefix = to_string(c.experiment);
    detail::Csv table({"edge", "mask", "gamma", "x_hat", "x_stderr", "delta_hat", "delta_stderr", "delta_theory", "delta_known",
                       "z", "sufficient"});
    detail::Csv scales({"edge", "mask", "gamma", "kind", "scale", "log_probability", "hits", "trials"});
    json out = json::array();
    for (const auto& r : rows) {
        table.cell(edge).cell(r.mask).cell(r.gamma).cell(r.x_hat).cell(r.x_stderr).cell(r.delta_hat).cell(r.delta_stderr);
        table.cell(r.delta_theory).cell(r.delta_known).cell(r.z).cell(r.sufficient);
        table.end_row();
        for (const auto& s : r.euclidean_scales) {
            scales.cell(edge).cell(r.mask).cell(r.gamma).cell("euclidean").cell(s.scale).cell(s.log_probability).cell(s.hits).cell(s.trials);
            scales.end_row();
        }
        for (const auto& s : r.quantum_scales) {
            scales.cell(edge).cell(r.mask).cell(r.gamma).cell("quantum").cell(s.scale).cell(s.log_probability).cell(s.hits).cell(s.trials);
            scales.end_row();
        }
        const std::string item = prefix + "/" + r.mask + "/gamma=" + detail::num(r.gamma);
        for (const auto& d : r.dropped) ctx.dropped.push_back({item + "/delta=" + detail::num(d.scale), d.code, d.detail});
        for (const auto& d : r.euclidean_dropped) ctx.dropped.push_back({prefix + "/" + r.mask + "/eps=" + detail::num(d.scale), d.code, d.detail});

        const bool eligible = (r.mask == "segment" || r.mask == "point" || c.experiment == Experiment::boundary_verify) &&
                              r.gamma <= c.gate_gamma_max + 1e-12;
        const double err = std::abs(r.delta_hat - r.delta_theory);
        const std::string tag = r.mask + " gamma=" + detail::num(r.gamma);
        ctx.check("|delta_hat - delta_theory| " + tag, err, 0.1, err <= 0.1, eligible);
        ctx.check("|delta_hat - delta_theory| / stderr " + tag, std::abs(r.z), 2.0, std::abs(r.z) <= 2.0, false);
        if (r.mask == "point" && std::isfinite(r.delta_known)) {
            const double e1 = std::abs(r.delta_hat - r.delta_known);
            ctx.check("|delta_hat - delta_known| " + tag, e1, 0.1, e1 <= 0.1, eligible);
        }
        ctx.check("usable scales " + tag, r.sufficient ? 1.0 : 0.0, 1.0, r.sufficient, eligible,
                  ">= 4 scales spanning 1.2 decades for both estimators");
        out.push_back({{"mask", r.mask}, {"gamma", r.gamma}, {"x_hat", detail::num_json(r.x_hat)},
                       {"delta_hat", detail::num_json(r.delta_hat)}, {"delta_stderr", detail::num_json(r.delta_stderr)},
                       {"delta_theory", detail::num_json(r.delta_theory)}, {"z", detail::num_json(r.z)}});
    }
    ctx.out.write("kpz_verify.csv", table.str());
    ctx.out.write("scales.csv", scales.str());
    ctx.summary["rows"] = out;
}

inline void run_kpz_verify(RunContext& ctx) {
    const auto& c = ctx.config;
    const Grid grid(c.grid_n);
    std::vector<FractalMask> masks;
    for (const auto& name : c.masks) {
        masks.push_back(make_fractal(mask_kind_from_string(name), fractal_params(c), grid));
        io::write_mask(ctx.out.path("masks/" + name + ".rle").string(), masks.back());
        ctx.out.adopt("masks/" + name + ".rle");
    }
    const EuclideanOptions eopt{c.n_samples, mix_seed(c.seed, 0xE0), c.n_boot};
    const auto rows = kpz_verify(masks, c.gamma_list, c.eps_list, c.delta_list, eopt, quantum_options(c, ctx.workers));
    report_kpz_rows(ctx, rows, "none");
}

inline void run_boundary_verify(RunContext& ctx) {
    const auto& c = ctx.config;
    const Grid grid(c.grid_n, BoundaryCondition::free);
    const Edge edge = edge_from_string(c.edge);
    std::vector<BoundaryMask> masks;
    for (const auto& name : c.masks) {
        masks.push_back(make_boundary_fractal(mask_kind_from_string(name), fractal_params(c), grid, edge));
        io::write_mask(ctx.out.path("masks/" + name + ".rle").string(), masks.back());
        ctx.out.adopt("masks/" + name + ".rle");
    }
    const EuclideanOptions eopt{c.n_samples, mix_seed(c.seed, 0xE0), c.n_boot};
    const auto rows = boundary_kpz_verify(masks, c.gamma_list, c.eps_list, c.delta_list, eopt, quantum_options(c, ctx.workers));
    report_kpz_rows(ctx, rows, c.edge);
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline json to_json(const Check& c) {
    return {{"name", c.name}, {"value", detail::num_json(c.value)}, {"threshold", c.threshold}, {"gated", c.gated},
            {"passed", c.passed}, {"detail", c.detail}};
}

/// Run a validated config, writing into out_dir. Throws ConfigError when the
/// config has error diagnostics.
inline RunManifest run(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       unsigned workers = worker_count()) {
    const auto diags = validate(config);
    if (has_errors(diags)) {
        std::string msg = "invalid config:";
        for (const auto& d : diags)
            if (d.severity == Severity::error) msg += "\n  " + d.key + ": " + d.message;
        throw ConfigError(msg);
    }
    RunManifest manifest;
    manifest.experiment = to_string(config.experiment);
    manifest.config_hash = config_hash(config);
    manifest.started = detail::utc_now();
    manifest.workers = workers;
    OutputDir out(out_dir);
    out.write("config.yaml", serialize_config(config));
    RunContext ctx{config, out, workers};
    switch (config.experiment) {
        case Experiment::kpz_table: run_kpz_table(ctx); break;
        case Experiment::gff_stats: run_gff_stats(ctx); break;
        case Experiment::measure_scan: run_measure_scan(ctx); break;
        case Experiment::fpt_run: run_fpt(ctx); break;
        case Experiment::kpz_verify: run_kpz_verify(ctx); break;
        case Experiment::boundary_verify: run_boundary_verify(ctx); break;
    }
    json summary = ctx.summary;
    summary["experiment"] = manifest.experiment;
    summary["config_hash"] = manifest.config_hash;
    summary["checks"] = json::array();
    for (const auto& ch : ctx.checks) summary["checks"].push_back(to_json(ch));
    out.write("summary.json", summary.dump(2) + "\n");

    manifest.files = out.files();
    manifest.dropped = std::move(ctx.dropped);
    manifest.checks = std::move(ctx.checks);
    manifest.finished = detail::utc_now();

    json m;
    m["experiment"] = manifest.experiment;
    m["config_hash"] = manifest.config_hash;
    m["version"] = manifest.version;
    m["started"] = manifest.started;
    m["finished"] = manifest.finished;
    m["workers"] = manifest.workers;
    m["passed"] = manifest.passed();
    m["files"] = json::array();
    for (const auto& f : manifest.files) m["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
    m["dropped"] = json::array();
    for (const auto& d : manifest.dropped) m["dropped"].push_back({{"item", d.item}, {"code", d.code}, {"detail", d.detail}});
    m["checks"] = json::array();
    for (const auto& ch : manifest.checks) m["checks"].push_back(to_json(ch));
    m["diagnostics"] = json::array();
    for (const auto& d : diags) m["diagnostics"].push_back({{"severity", to_string(d.severity)}, {"key", d.key}, {"message", d.message}});
    std::ofstream mf(out.root() / "manifest.json", std::ios::binary);
    mf << m.dump(2) << "\n";
    return manifest;
}

}  // namespace lqg
