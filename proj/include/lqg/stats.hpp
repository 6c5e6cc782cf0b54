#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace lqg::stats {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;

    double stderr_mean() const { return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }
    /// Standard error of the sample variance under normality.
    double stderr_variance() const { return n > 1 ? variance * std::sqrt(2.0 / static_cast<double>(n - 1)) : 0.0; }
};

/// Two-pass moments; order-dependent only through floating-point summation,
/// so callers pass values in a fixed order.
inline Moments moments(std::span<const double> v) {
    Moments m;
    m.n = v.size();
    if (m.n == 0) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(m.n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double nn = static_cast<double>(m.n);
    m.variance = m.n > 1 ? m2 / (nn - 1.0) : 0.0;
    if (m2 > 0.0) {
        const double pop = m2 / nn;
        m.skewness = (m3 / nn) / std::pow(pop, 1.5);
        m.excess_kurtosis = (m4 / nn) / (pop * pop) - 3.0;
    }
    return m;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;  // ordinary least-squares standard error
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double sse = std::fmax(0.0, syy - f.slope * sxy);
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    return f;
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::fmax(d, std::fmax(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace lqg::stats
