#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "maxstable/errors.hpp"

namespace maxstable {

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && x[order[j]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
        i = j;
    }
    return rank;
}

/// Empirical quantile, type 7 (linear interpolation between order statistics).
inline double quantile_type7(std::vector<double> x, double q) {
    if (x.empty()) throw DomainError("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0,1]");
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

inline double median(std::vector<double> x) { return quantile_type7(std::move(x), 0.5); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(K > lambda) for the limiting Kolmogorov distribution.
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.0) {
        // Jacobi-theta form converges fast for small lambda.
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        double sum = 0.0;
        for (int j = 1;; ++j) {
            const double odd = 2.0 * j - 1.0;
            const double term = std::exp(-odd * odd * c);
            sum += term;
            if (term < 1e-12) break;
        }
        const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int j = 1;; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? term : -term);
        if (term < 1e-12) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS distance between a sample and a continuous cdf.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

inline double unit_frechet_cdf(double x) { return x <= 0.0 ? 0.0 : std::exp(-1.0 / x); }

}  // namespace maxstable
