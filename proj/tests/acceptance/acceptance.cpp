// Acceptance run: one PASS/FAIL line per criterion.
//
//   lqg_acceptance [--report FILE] [criterion ...]
//
// With no criteria listed all eight run. Exit status is 0 only when every
// criterion that ran passed.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lqg/boundary.hpp"
#include "lqg/brownian.hpp"
#include "lqg/config.hpp"
#include "lqg/fractal.hpp"
#include "lqg/gff.hpp"
#include "lqg/harness.hpp"
#include "lqg/kpz.hpp"
#include "lqg/measure.hpp"

using namespace lqg;

namespace {

std::string report;

void say(const char* fmt, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    std::fputs(buf, stdout);
    std::fflush(stdout);
    report += buf;
}

std::vector<double> geometric(double first, double ratio, int count) {
    std::vector<double> v;
    for (int k = 0; k < count; ++k) v.push_back(first * std::pow(ratio, k));
    return v;
}

// ---------------------------------------------------------------------------

bool criterion1() {
    Philox4x32 rng(20240601, 1);
    double worst_rt = 0.0, worst_dual = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double gamma = 0.1 + 3.9 * (1.0 - rng.uniform());  // (0.1, 4]
        const double x = 10.0 * rng.uniform();
        const auto g = GammaParams::from_gamma(gamma);
        const double d = kpz_delta_of_x(g, x).delta;
        worst_rt = std::max(worst_rt, std::abs(kpz_x_of_delta(g, d) - x) / std::max(1.0, x));
        const auto r = duality_report(g, x);
        worst_dual = std::max({worst_dual, std::abs(r.product), std::abs(r.alpha_invariance), std::abs(r.string_duality)});
    }
    const double c0 = std::abs(gamma_of_central_charge(0.0) - std::sqrt(8.0 / 3.0));
    const double c12 = std::abs(gamma_of_central_charge(0.5) - std::sqrt(3.0));
    const double c1 = std::abs(gamma_of_central_charge(1.0) - 2.0);
    const double worst_c = std::max({c0, c12, c1});
    say("  roundtrip max |x(D(x)) - x| / max(1,x) = %.3g (<= 1e-12)\n", worst_rt);
    say("  duality residual max = %.3g (<= 1e-10)\n", worst_dual);
    say("  gamma(c) at c = 0, 1/2, 1: max error %.3g (<= 1e-12)\n", worst_c);
    return worst_rt <= 1e-12 && worst_dual <= 1e-10 && worst_c <= 1e-12;
}

bool criterion2() {
    const double gammas[] = {1.0, std::sqrt(2.0), std::sqrt(8.0 / 3.0)};
    const double As[] = {2.0, 4.0};
    const double xs[] = {0.0, 0.25, 0.5, 1.0};
    int within3 = 0, within4 = 0, cells = 0;
    std::uint64_t cell_seed = 0;
    for (double gamma : gammas) {
        const auto g = GammaParams::from_gamma(gamma);
        for (double A : As) {
            PathEnsembleOptions opt;
            opt.dt = 1e-4;
            opt.seed = mix_seed(2, cell_seed++);
            opt.passage.bridge_correction = true;
            const auto paths = simulate_paths(g, A, 100000, opt);
            for (const auto& e : martingale_estimates(g, xs, A, paths)) {
                const double z = e.z_score();
                ++cells;
                within3 += std::abs(z) <= 3.0;
                within4 += std::abs(z) <= 4.0;
                say("  gamma=%.4f A=%g x=%-4g  MC=%.6f  exact=%.6f  se=%.2e  z=%+.2f\n", gamma, A, e.x, e.value,
                    e.closed_form, e.std_error, z);
            }
        }
    }
    say("  |z| <= 3 in %d/%d cells (need >= 22), |z| <= 4 in %d/%d (need all)\n", within3, cells, within4, cells);
    return within3 >= 22 && within4 == cells;
}

bool criterion3() {
    const auto g = GammaParams::from_gamma(1.0);
    PathEnsembleOptions opt;
    opt.dt = 1e-4;
    opt.seed = 3;
    const auto paths = simulate_paths(g, 4.0, 100000, opt);
    const auto fit = density_fit(paths, 0.0, 10000);
    say("  KS(hit times, gamma=1, A=4, %zu hits) = %.4f (<= 0.01)\n", fit.n_hits, fit.ks);
    const double gammas[] = {0.5, 1.0, std::sqrt(2.0), std::sqrt(8.0 / 3.0), std::sqrt(3.0)};
    const double xs[] = {0.0, 0.25, 0.5, 1.0};
    double worst = 0.0;
    int pairs = 0;
    for (double gamma : gammas) {
        const auto gp = GammaParams::from_gamma(gamma);
        for (double x : xs) {
            const double q = laplace_transform_quadrature(2.0, gp.a, x);
            worst = std::max(worst, std::abs(q - std::exp(-kpz_beta(gp, x) * 2.0)));
            ++pairs;
        }
    }
    say("  Laplace transform vs exp(-beta A) over %d (gamma, x) pairs: max error %.3g (<= 1e-6)\n", pairs, worst);
    return fit.ks <= 0.01 && worst <= 1e-6;
}

bool criterion4() {
    const auto g = GammaParams::from_gamma(4.0);
    const double A = 1.0;
    PathEnsembleOptions opt;
    opt.dt = 1e-4;
    opt.seed = 4;
    const auto paths = simulate_paths(g, A, 1000000, opt);
    const double xs[] = {0.0};
    const auto e = martingale_estimates(g, xs, A, paths)[0];
    const double delta = std::exp(-g.gamma * A);
    const double expected = std::pow(delta, 1.0 - 4.0 / (g.gamma * g.gamma));
    const bool hit_ok = std::abs(e.hit_rate - expected) <= 3.0 * e.hit_rate_stderr;
    say("  hit rate %.6f +- %.6f vs delta^{1-4/gamma^2} = %.6f (z=%+.2f)\n", e.hit_rate, e.hit_rate_stderr, expected,
        (e.hit_rate - expected) / e.hit_rate_stderr);
    const auto gd = GammaParams::from_gamma(g.gamma_dual);
    const double delta_dual = std::pow(delta, 4.0 / (g.gamma * g.gamma));
    bool cond_ok = true;
    for (double x : {0.25, 1.0}) {
        const auto c = conditional_on_hit(g, x, paths);
        const double prediction = std::pow(delta_dual, kpz_delta_of_x(gd, x).delta);
        const double z = (c.value - prediction) / c.std_error;
        cond_ok = cond_ok && std::abs(z) <= 3.0;
        say("  x=%g: value/hit_rate = %.5f +- %.5f vs delta'^Delta' = %.5f (z=%+.2f)\n", x, c.value, c.std_error,
            prediction, z);
    }
    return hit_ok && cond_ok;
}

bool criterion5() {
    const Grid grid(1024);
    const double eps[] = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    const std::size_t n_fields = 8192;
    const auto sites = pooling_sites(1.0 / 16, 1.0 / 8);
    const auto laws = measure_variance_laws(grid, sites, eps, n_fields, 5);
    std::size_t centre = 0;
    for (std::size_t s = 0; s < sites.size(); ++s)
        if (sites[s].x == 0.5 && sites[s].y == 0.5) centre = s;
    const auto& c = laws[centre];
    bool diff_ok = true;
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b) {
            const double expected = std::log(eps[a] / eps[b]);
            const double rel = c.diff_variance[a][b] / expected - 1.0;
            diff_ok = diff_ok && std::abs(rel) <= 0.05;
            say("  centre Var[h_%g - h_%g] = %.4f +- %.4f vs %.4f (%+.1f%%)\n", eps[a], eps[b], c.diff_variance[a][b],
                c.diff_stderr[a][b], expected, 100.0 * rel);
        }
    const auto pooled = pooled_slope(laws);
    const bool slope_ok = std::abs(pooled.slope - 1.0) <= 0.02;
    say("  variance slope: centre %.4f, pooled over %zu sites %.4f (site spread se %.4f) (1.00 +- 0.02)\n", c.slope,
        pooled.n_sites, pooled.slope, pooled.site_stderr);

    const Grid fgrid(1024, BoundaryCondition::free);
    const auto s_list = pooling_edge_sites(1.0 / 16, 1.0 / 8);
    const auto blaws = measure_boundary_variance_laws(fgrid, Edge::bottom, s_list, eps, 2048, 55);
    const auto bp = pooled_slope(blaws);
    const bool bslope_ok = std::abs(bp.slope - 2.0) <= 0.2;
    say("  boundary semicircle slope pooled over %zu edge sites: %.4f (site spread se %.4f) (2.0 +- 0.2)\n", bp.n_sites,
        bp.slope, bp.site_stderr);
    say("  %zu interior fields, 2048 free fields, n=1024\n", n_fields);
    return diff_ok && slope_ok && bslope_ok;
}

bool criterion6() {
    const Grid grid(512);
    const double eps[] = {1.0 / 16, 1.0 / 64};
    const std::size_t n_fields = 32768;
    const auto d = expected_density_at(grid, 1.0, {0.5, 0.5}, eps, n_fields, 6);
    const auto& a = d.mass[0];
    const auto& b = d.mass[1];
    const double combined = std::hypot(a.stderr_mean(), b.stderr_mean());
    const double zc = (a.mean - b.mean) / combined;
    say("  %zu fields, n=512, gamma=1, expected C(centre)^{1/2} = %.6f\n", n_fields, d.expected);
    for (std::size_t k = 0; k < 2; ++k)
        say("  eps=1/%g: mean M = %.5f +- %.5f, ratio %.4f +- %.4f\n", 1.0 / eps[k], d.mass[k].mean,
            d.mass[k].stderr_mean(), d.mass[k].mean / d.expected, d.mass[k].stderr_mean() / d.expected);
    say("  across eps: difference %.2f combined SE (<= 3)\n", zc);
    const double rel16 = a.mean / d.expected - 1.0;
    const double rel64 = b.mean / d.expected - 1.0;
    say("  match at eps=1/16: %+.2f%% (gated, <= 5%%); at eps=1/64: %+.2f%% (reported, se %.1f%%)\n", 100.0 * rel16,
        100.0 * rel64, 100.0 * b.stderr_mean() / d.expected);
    return std::abs(zc) <= 3.0 && std::abs(rel16) <= 0.05;
}

bool criterion7() {
    const auto cfg = default_config(Experiment::kpz_verify);
    const Grid grid(cfg.grid_n);
    const FractalMask masks[] = {make_fractal(MaskKind::segment, {}, grid), make_fractal(MaskKind::point, {}, grid)};
    const EuclideanOptions eopt{cfg.n_samples, 71, 200};
    QuantumOptions q;
    q.n_fields = 200;
    q.n_points = 2000;
    q.seed = 7;
    q.ladder.eps_max = cfg.eps_max;
    q.window = {cfg.window_lo, cfg.window_hi};
    q.n_boot = 200;
    q.max_undetermined = cfg.max_undetermined;
    const double gammas[] = {0.5, 1.0, std::sqrt(8.0 / 3.0)};
    const auto rows = kpz_verify(masks, gammas, cfg.eps_list, cfg.delta_list, eopt, q);
    bool ok = true;
    for (const auto& r : rows) {
        const bool gated = r.gamma <= 1.0 + 1e-12;
        const bool two_se = std::abs(r.z) <= 2.0;
        bool pass = true;
        if (r.mask == "segment") pass = std::abs(r.delta_hat - r.delta_theory) <= 0.1;
        if (r.mask == "point") pass = std::abs(r.delta_hat - 1.0) <= 0.1;
        if (gated) ok = ok && pass;
        say("  %-8s gamma=%.4f x_hat=%.4f+-%.4f Delta_hat=%.4f+-%.4f Delta_theory=%.4f |diff|=%.4f z=%+.2f %s%s%s\n",
            r.mask.c_str(), r.gamma, r.x_hat, r.x_stderr, r.delta_hat, r.delta_stderr, r.delta_theory,
            std::abs(r.delta_hat - r.delta_theory), r.z, gated ? (pass ? "[gated ok]" : "[gated FAIL]") : "[reported]",
            two_se ? " within 2 se" : " outside 2 se", r.sufficient ? "" : " (insufficient scales)");
        for (const auto& dsc : r.dropped) say("    dropped delta=%.3g: %s (%s)\n", dsc.scale, dsc.code.c_str(), dsc.detail.c_str());
    }
    return ok;
}

bool criterion8() {
    namespace fs = std::filesystem;
    const auto root = fs::temp_directory_path() / "lqg_acceptance_determinism";
    bool ok = true;
    for (auto e : {Experiment::kpz_table, Experiment::gff_stats, Experiment::measure_scan, Experiment::fpt_run,
                   Experiment::kpz_verify, Experiment::boundary_verify}) {
        auto c = default_config(e);
        c.seed = 8;
        c.n_fields = std::min<std::size_t>(c.n_fields, 24);
        c.n_paths = std::min<std::size_t>(c.n_paths, 20000);
        c.n_points = std::min<std::size_t>(c.n_points, 200);
        c.n_samples = std::min<std::size_t>(c.n_samples, 20000);
        c.boundary_fields = std::min<std::size_t>(c.boundary_fields, 16);
        c.n_boot = 20;
        if (e != Experiment::kpz_table && e != Experiment::fpt_run) c.grid_n = 256;
        if (e == Experiment::gff_stats || e == Experiment::measure_scan) c.eps_list = {1.0 / 8, 1.0 / 16, 1.0 / 64};
        if (e == Experiment::measure_scan) c.n_samples = 4;
        if (e == Experiment::kpz_verify) c.eps_list = geometric(1.0 / 128, std::sqrt(2.0), 8);
        if (e == Experiment::boundary_verify) {
            c.cantor_depth = 4;
            std::erase_if(c.eps_list, [&](double r) { return r < 2.0 / c.grid_n; });
        }
        if (e == Experiment::fpt_run) {
            c.gamma_list = {1.0, 4.0};
            c.dt = 1e-3;
        }
        std::vector<std::string> snapshots;
        std::size_t n_files = 0;
        for (unsigned w : {1u, 2u, 8u}) {
            const auto dir = root / (std::string(to_string(e)) + "_w" + std::to_string(w));
            fs::remove_all(dir);
            const auto m = run(c, dir, w);
            std::string all;
            for (const auto& f : m.files) all += f.name + " " + f.fnv1a + "\n";
            snapshots.push_back(all);
            n_files = m.files.size();
        }
        const bool same = snapshots[0] == snapshots[1] && snapshots[0] == snapshots[2];
        ok = ok && same;
        say("  %-16s %zu files, workers 1/2/8 %s\n", to_string(e), n_files, same ? "byte-identical" : "DIFFER");
    }
    return ok;
}

struct Criterion {
    int id;
    const char* title;
    std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    std::string report_path = "acceptance_report.txt";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--report" && i + 1 < argc) report_path = argv[++i];
        else selected.insert(std::stoi(a));
    }
    const Criterion criteria[] = {
        {1, "analytic KPZ suite", criterion1},
        {2, "martingale identity", criterion2},
        {3, "first-passage density", criterion3},
        {4, "singular regime and duality (gamma=4)", criterion4},
        {5, "GFF variance laws", criterion5},
        {6, "measure expectation law", criterion6},
        {7, "empirical KPZ", criterion7},
        {8, "determinism across workers", criterion8},
    };
    say("workers: %u\n", worker_count());
    std::vector<std::string> lines;
    bool all = true;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        say("criterion %d: %s\n", c.id, c.title);
        const auto t0 = std::chrono::steady_clock::now();
        bool pass = false;
        try {
            pass = c.run();
        } catch (const std::exception& e) {
            say("  error: %s\n", e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char line[160];
        std::snprintf(line, sizeof line, "C%d %s  %s (%.1f s)\n", c.id, pass ? "PASS" : "FAIL", c.title, secs);
        say("%s", line);
        lines.push_back(line);
        all = all && pass;
    }
    say("\nsummary\n");
    for (const auto& l : lines) say("%s", l.c_str());
    std::ofstream(report_path) << report;
    return all ? 0 : 1;
}
