#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lqg/kpz.hpp"

using namespace lqg;

namespace {

// Positive root of (g^2/4) D^2 + (1 - g^2/4) D - x = 0, written independently
// of the library's beta-based evaluation.
double quadratic_root(double gamma, double x) {
    const double A = gamma * gamma / 4.0, B = 1.0 - A;
    return (-B + std::sqrt(B * B + 4.0 * A * x)) / (2.0 * A);
}

const std::vector<double> kGammas = {0.3, 0.5, 1.0, std::sqrt(2.0), std::sqrt(8.0 / 3.0), std::sqrt(3.0), 1.99,
                                     2.5, 3.0, 4.0, 8.0};

}  // namespace

TEST(Kpz, MatchesQuadraticRoot) {
    for (double g : kGammas) {
        const auto p = GammaParams::from_gamma(g);
        for (int k = 0; k <= 40; ++k) {
            const double x = k / 20.0;
            EXPECT_NEAR(kpz_delta_of_x(p, x).delta, quadratic_root(g, x), 1e-12) << "gamma=" << g << " x=" << x;
        }
    }
}

TEST(Kpz, RoundTrip) {
    for (double g : kGammas) {
        const auto p = GammaParams::from_gamma(g);
        for (int k = 0; k <= 100; ++k) {
            const double x = k / 50.0;
            EXPECT_NEAR(kpz_x_of_delta(p, kpz_delta_of_x(p, x).delta), x, 1e-12 * std::max(1.0, x));
        }
    }
}

TEST(Kpz, FixedPointsAndKnownValue) {
    for (double g : kGammas) {
        const auto p = GammaParams::from_gamma(g);
        // Above gamma = 2 the branch through beta = sqrt(a^2 + 4x) - a starts at gamma_str.
        EXPECT_NEAR(kpz_delta_of_x(p, 0.0).delta, g < 2.0 ? 0.0 : p.gamma_str, 1e-15);
        EXPECT_NEAR(kpz_delta_of_x(p, 1.0).delta, 1.0, 1e-14);
    }
    // Pure gravity, x = 1/2: Delta = (sqrt(13) - 1) / 4.
    EXPECT_NEAR(kpz_delta_of_x(GammaParams::from_gamma(std::sqrt(8.0 / 3.0)), 0.5).delta, (std::sqrt(13.0) - 1.0) / 4.0,
                1e-14);
}

TEST(Kpz, MonotoneAndAboveDiagonalBelowTwo) {
    for (double g : {0.5, 1.0, std::sqrt(3.0), 1.9}) {
        const auto p = GammaParams::from_gamma(g);
        double prev = -1.0;
        for (int k = 1; k < 100; ++k) {
            const double x = k / 100.0;
            const double d = kpz_delta_of_x(p, x).delta;
            EXPECT_GT(d, prev);
            EXPECT_GT(d, x);
            EXPECT_LT(d, 1.0);
            prev = d;
        }
    }
}

TEST(Kpz, BetaAndAlpha) {
    for (double g : kGammas) {
        const auto p = GammaParams::from_gamma(g);
        for (double x : {0.1, 0.5, 0.9, 1.5}) {
            const auto s = kpz_delta_of_x(p, x);
            EXPECT_NEAR(s.beta, g * s.delta, 1e-13);
            EXPECT_NEAR(s.alpha, g * (1.0 - s.delta), 1e-12);
            // beta solves beta^2/2 + a beta = 2x, the exponential martingale condition.
            EXPECT_NEAR(s.beta * s.beta / 2.0 + p.a * s.beta, 2.0 * x, 1e-11);
        }
    }
}

TEST(Kpz, Duality) {
    for (double g : {0.5, 1.0, std::sqrt(2.0), std::sqrt(8.0 / 3.0), 1.9}) {
        const auto p = GammaParams::from_gamma(g);
        EXPECT_NEAR(p.dual().gamma, 4.0 / g, 1e-15);
        EXPECT_NEAR(p.dual().Q, p.Q, 1e-14);
        for (int k = 0; k <= 20; ++k) {
            const auto r = duality_report(p, k / 10.0);
            EXPECT_LT(r.max_abs_residual(), 1e-12) << "gamma=" << g << " x=" << k / 10.0;
            EXPECT_NEAR(r.delta * r.delta_dual, k / 10.0, 1e-12);
        }
    }
}

TEST(Kpz, CentralCharge) {
    EXPECT_NEAR(gamma_of_central_charge(0.0), std::sqrt(8.0 / 3.0), 1e-15);
    EXPECT_NEAR(gamma_of_central_charge(0.5), std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(gamma_of_central_charge(1.0), 2.0, 1e-15);
    EXPECT_NEAR(gamma_of_central_charge(-2.0), std::sqrt(2.0), 1e-15);
    EXPECT_THROW(gamma_of_central_charge(1.5), std::invalid_argument);
}

TEST(Kpz, RejectsBadInput) {
    EXPECT_THROW(GammaParams::from_gamma(0.0), std::invalid_argument);
    EXPECT_THROW(GammaParams::from_gamma(-1.0), std::invalid_argument);
    EXPECT_THROW(kpz_delta_of_x(GammaParams::from_gamma(1.0), -0.1), std::invalid_argument);
}
