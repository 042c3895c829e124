// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace adjmc {

/// Streaming mean/variance (Welford).
struct MeanVar {
    long long n{0};
    double mean{0};
    double m2{0};

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double std_err() const { return n > 0 ? stddev() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

inline double sample_mean(std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = sample_mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double sample_std_err(std::span<const double> x) {
    return x.empty() ? 0.0 : std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

inline double sample_correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    MeanVar sa, sb;
    for (std::size_t i = 0; i < n; ++i) {
        sa.add(a[i]);
        sb.add(b[i]);
    }
    double cov = 0;
    for (std::size_t i = 0; i < n; ++i) cov += (a[i] - sa.mean) * (b[i] - sb.mean);
    cov /= static_cast<double>(n - 1);
    const double denom = sa.stddev() * sb.stddev();
    return denom > 0 ? cov / denom : 0.0;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    MeanVar sx;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx.add(lx[i]);
    }
    const double my = sample_mean(ly);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (lx[i] - sx.mean) * (ly[i] - my);
        den += (lx[i] - sx.mean) * (lx[i] - sx.mean);
    }
    return den > 0 ? num / den : 0.0;
}

/// Kolmogorov-Smirnov statistic of a sample against Uniform([lo, hi]).
inline double ks_uniform(std::vector<double> sample, double lo, double hi) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = (sample[i] - lo) / (hi - lo);
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - cdf));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    return d;
}

inline double rel_l2_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0, den = 0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace adjmc
