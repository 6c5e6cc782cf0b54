#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lqg/brownian.hpp"

using namespace lqg;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Closed-form first-passage CDF of -B_t + a t to level A.
double passage_cdf_oracle(double A, double a, double t) {
    return phi((a * t - A) / std::sqrt(t)) + std::exp(2.0 * a * A) * phi((-A - a * t) / std::sqrt(t));
}

PathEnsembleOptions options(std::uint64_t seed, unsigned workers = 1) {
    PathEnsembleOptions o;
    o.dt = 1e-3;
    o.seed = seed;
    o.workers = workers;
    return o;
}

}  // namespace

TEST(PassageLaw, CdfMatchesClosedForm) {
    for (double a : {1.5, 0.5, 0.0, -1.5})
        for (double A : {0.5, 2.0})
            for (double t : {0.05, 0.5, 2.0, 10.0})
                EXPECT_NEAR(first_passage_cdf(A, a, t), passage_cdf_oracle(A, a, t), 1e-9) << a << " " << A << " " << t;
    EXPECT_EQ(first_passage_cdf(1.0, 1.0, 0.0), 0.0);
}

TEST(PassageLaw, LaplaceTransform) {
    for (double gamma : {0.5, 1.0, std::sqrt(3.0), 3.0})
        for (double A : {0.5, 2.0})
            for (double x : {0.0, 0.25, 1.0}) {
                const double a = 2.0 / gamma - gamma / 2.0;
                const double beta = std::sqrt(a * a + 4.0 * x) - a;
                EXPECT_NEAR(laplace_transform_quadrature(A, a, x), std::exp(-beta * A), 1e-9);
            }
    EXPECT_NEAR(hit_probability(2.0, -0.5), std::exp(-2.0), 1e-15);
    EXPECT_EQ(hit_probability(2.0, 0.5), 1.0);
}

TEST(Paths, DeterministicAcrossWorkers) {
    const auto g = GammaParams::from_gamma(1.0);
    PathEnsembleOptions o = options(3);
    const auto one = simulate_paths(g, 1.0, 9000, o);
    o.workers = 3;
    const auto three = simulate_paths(g, 1.0, 9000, o);
    for (std::size_t i = 0; i < one.size(); ++i) {
        ASSERT_EQ(one[i].T, three[i].T);
        ASSERT_EQ(one[i].hit, three[i].hit);
    }
}

TEST(Paths, MartingaleIdentity) {
    for (double gamma : {1.0, std::sqrt(8.0 / 3.0)}) {
        const auto g = GammaParams::from_gamma(gamma);
        const auto paths = simulate_paths(g, 2.0, 20000, options(11));
        const double xs[] = {0.0, 0.25, 0.5, 1.0};
        for (const auto& e : martingale_estimates(g, xs, 2.0, paths)) {
            EXPECT_LE(std::abs(e.z_score()), 4.0) << "gamma=" << gamma << " x=" << e.x;
            EXPECT_NEAR(e.closed_form, std::exp(-kpz_beta(g, e.x) * 2.0), 1e-15);
        }
    }
}

TEST(Paths, SequentialChainAgrees) {
    const auto g = GammaParams::from_gamma(1.0);
    auto o = options(21);
    o.passage.block_log2 = 0;
    const auto paths = simulate_paths(g, 1.0, 5000, o);
    const double xs[] = {0.5};
    EXPECT_LE(std::abs(martingale_estimates(g, xs, 1.0, paths)[0].z_score()), 4.0);
}

TEST(Paths, AntitheticPairs) {
    const auto g = GammaParams::from_gamma(1.0);
    auto o = options(5);
    o.passage.antithetic = true;
    const auto paths = simulate_paths(g, 1.0, 8000, o);
    EXPECT_NE(paths[0].T, paths[1].T);
    const double xs[] = {0.25};
    const auto e = martingale_estimates(g, xs, 1.0, paths, true)[0];
    EXPECT_EQ(e.n_paths, 8000u);
    EXPECT_LE(std::abs(e.z_score()), 4.0);
}

// For gamma > 2 the walk drifts away; conditioned on hitting, the Laplace
// transform is the one of the dual parameter 4/gamma.
TEST(Paths, DualityConditionalOnHit) {
    const auto g = GammaParams::from_gamma(4.0);
    const double A = 1.0;
    const auto paths = simulate_paths(g, A, 40000, options(8));
    const double xs[] = {0.0};
    const auto e = martingale_estimates(g, xs, A, paths)[0];
    EXPECT_NEAR(e.hit_rate, std::exp(2.0 * g.a * A), 4.0 * e.hit_rate_stderr);
    const auto gd = GammaParams::from_gamma(1.0);
    for (double x : {0.25, 1.0}) {
        const auto c = conditional_on_hit(g, x, paths);
        const double prediction = std::exp(-gd.gamma * A * kpz_delta_of_x(gd, x).delta);
        EXPECT_NEAR(c.value, prediction, 4.0 * c.std_error) << x;
    }
}

TEST(Paths, DensityFit) {
    const auto g = GammaParams::from_gamma(1.0);
    const auto paths = simulate_paths(g, 2.0, 20000, options(13));
    const auto fit = density_fit(paths, 0.0, 1000);
    EXPECT_EQ(fit.n_hits, 20000u);
    EXPECT_LT(fit.ks, 1.8 / std::sqrt(20000.0));
    EXPECT_NEAR(fit.concentration, g.a, 0.05);  // A / E[T] = a at x = 0
    EXPECT_THROW(density_fit(paths, 0.0, 50000), std::invalid_argument);
}

TEST(Paths, RejectsBadArguments) {
    const auto g = GammaParams::from_gamma(1.0);
    EXPECT_THROW(simulate_stopping_time(g, 0.0, 1e-3, 10.0, 1, 0), std::invalid_argument);
    EXPECT_THROW(simulate_stopping_time(g, 1.0, 0.0, 10.0, 1, 0), std::invalid_argument);
    const std::vector<StoppingTimeSample> one(1);
    const double xs[] = {0.0};
    EXPECT_THROW(martingale_estimates(g, xs, 1.0, one), std::invalid_argument);
}
