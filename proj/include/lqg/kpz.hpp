#pragma once

// Closed-form KPZ algebra: the exponent map between Euclidean and quantum
// scaling, its positive-root inverse, and the gamma <-> 4/gamma duality
// identities.

#include <cmath>
#include <stdexcept>

namespace lqg {

/// Deterministic quantities attached to a Liouville parameter gamma.
struct GammaParams {
    double gamma = 0.0;
    double gamma_dual = 0.0;  // 4 / gamma
    double Q = 0.0;           // 2/gamma + gamma/2
    double a = 0.0;           // Q - gamma = 2/gamma - gamma/2
    double gamma_str = 0.0;   // 1 - 4/gamma^2 = 2 - 2Q/gamma

    static GammaParams from_gamma(double gamma) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw std::invalid_argument("GammaParams: gamma must be positive and finite");
        }
        GammaParams g;
        g.gamma = gamma;
        g.gamma_dual = 4.0 / gamma;
        g.Q = 2.0 / gamma + gamma / 2.0;
        g.a = 2.0 / gamma - gamma / 2.0;
        g.gamma_str = 1.0 - 4.0 / (gamma * gamma);
        return g;
    }

    GammaParams dual() const { return from_gamma(gamma_dual); }

    /// gamma * Q, the exponent of eps in the ball mass.
    double ball_exponent() const { return 2.0 + gamma * gamma / 2.0; }
};

struct ScalingExponents {
    double x = 0.0;
    double delta = 0.0;
    double beta = 0.0;
    double alpha = 0.0;
};

/// x = (gamma^2/4) Delta^2 + (1 - gamma^2/4) Delta, evaluated as written.
inline double kpz_x_of_delta(const GammaParams& g, double delta) {
    const double q = g.gamma * g.gamma / 4.0;
    return q * delta * delta + (1.0 - q) * delta;
}

/// Positive-root inverse through the martingale exponent
/// beta = sqrt(a^2 + 4x) - a. The same formula covers gamma > 2 where a < 0.
inline ScalingExponents kpz_delta_of_x(const GammaParams& g, double x) {
    if (!(x >= 0.0)) throw std::invalid_argument("kpz_delta_of_x: x must be nonnegative");
    ScalingExponents s;
    s.x = x;
    const double root = std::sqrt(g.a * g.a + 4.0 * x);
    // Cancellation-free form of root - a when a > 0.
    s.beta = g.a > 0.0 ? 4.0 * x / (root + g.a) : root - g.a;
    s.delta = s.beta / g.gamma;
    s.alpha = g.gamma * (1.0 - s.delta);
    return s;
}

/// Martingale exponent beta_gamma(x).
inline double kpz_beta(const GammaParams& g, double x) { return kpz_delta_of_x(g, x).beta; }

/// gamma(c) = (sqrt(25 - c) - sqrt(1 - c)) / sqrt(6) for central charge c <= 1.
inline double gamma_of_central_charge(double c) {
    if (!(c <= 1.0)) throw std::invalid_argument("gamma_of_central_charge: requires c <= 1");
    return (std::sqrt(25.0 - c) - std::sqrt(1.0 - c)) / std::sqrt(6.0);
}

/// Residuals of the duality identities for a (gamma, 4/gamma) pair.
struct DualityReport {
    double gamma = 0.0;
    double x = 0.0;
    double delta = 0.0;       // Delta_gamma(x)
    double delta_dual = 0.0;  // Delta_{4/gamma}(x)
    double alpha = 0.0;
    double Q = 0.0;
    double delta_relation = 0.0;    // Delta_g - 1 - (4/g^2)(Delta_g' - 1)
    double product = 0.0;           // Delta_g Delta_g' - x
    double alpha_invariance = 0.0;  // alpha(g) - alpha(g')
    double seiberg_excess = 0.0;    // max(0, alpha - Q)
    double string_duality = 0.0;    // (1 - gstr)(1 - gstr') - 1

    double max_abs_residual() const {
        double m = std::abs(delta_relation);
        m = std::fmax(m, std::abs(product));
        m = std::fmax(m, std::abs(alpha_invariance));
        m = std::fmax(m, std::abs(seiberg_excess));
        return std::fmax(m, std::abs(string_duality));
    }
};

inline DualityReport duality_report(const GammaParams& g, double x) {
    const GammaParams gd = g.dual();
    const ScalingExponents s = kpz_delta_of_x(g, x);
    const ScalingExponents sd = kpz_delta_of_x(gd, x);
    DualityReport r;
    r.gamma = g.gamma;
    r.x = x;
    r.delta = s.delta;
    r.delta_dual = sd.delta;
    r.alpha = s.alpha;
    r.Q = g.Q;
    r.delta_relation = (s.delta - 1.0) - 4.0 / (g.gamma * g.gamma) * (sd.delta - 1.0);
    r.product = s.delta * sd.delta - x;
    r.alpha_invariance = s.alpha - sd.alpha;
    r.seiberg_excess = std::fmax(0.0, s.alpha - g.Q);
    r.string_duality = (1.0 - g.gamma_str) * (1.0 - gd.gamma_str) - 1.0;
    return r;
}

}  // namespace lqg
