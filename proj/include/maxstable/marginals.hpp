#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "maxstable/data.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/parallel.hpp"
#include "maxstable/stats.hpp"

namespace maxstable {

struct GevParams {
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu) || !std::isfinite(xi))
            throw DomainError("GEV parameters require finite mu, xi and sigma > 0");
    }
};

// Below this |xi| the Gumbel limit is used.
inline constexpr double kGumbelShapeTol = 1e-8;

inline double gev_cdf(const GevParams& p, double x) {
    const double z = (x - p.mu) / p.sigma;
    if (std::abs(p.xi) < kGumbelShapeTol) return std::exp(-std::exp(-z));
    const double t = 1.0 + p.xi * z;
    if (t <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::exp(-std::log1p(p.xi * z) / p.xi));
}

inline double gev_quantile(const GevParams& p, double q) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("gev_quantile: probability must lie in (0,1)");
    const double y = -std::log(q);  // unit exponential scale
    if (std::abs(p.xi) < kGumbelShapeTol) return p.mu - p.sigma * std::log(y);
    return p.mu + p.sigma * std::expm1(-p.xi * std::log(y)) / p.xi;
}

/// Maxima over consecutive blocks of a days x stations series (NaN = missing).
/// A trailing partial block is dropped, as is any block with a missing day at
/// any station, so rows stay aligned across stations.
inline MaximaMatrix block_maxima(const Matrix& daily, std::size_t block_length) {
    if (block_length < 1) throw DomainError("block_maxima: block_length must be >= 1");
    const std::size_t n_blocks = daily.rows() / block_length;
    std::vector<std::vector<double>> rows;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        std::vector<double> row(daily.cols(), -std::numeric_limits<double>::infinity());
        bool complete = true;
        for (std::size_t d = b * block_length; d < (b + 1) * block_length && complete; ++d)
            for (std::size_t s = 0; s < daily.cols(); ++s) {
                const double v = daily(d, s);
                if (std::isnan(v)) {
                    complete = false;
                    break;
                }
                row[s] = std::max(row[s], v);
            }
        if (complete) rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), daily.cols());
    for (std::size_t b = 0; b < rows.size(); ++b) std::copy(rows[b].begin(), rows[b].end(), m.row(b).begin());
    return MaximaMatrix(std::move(m), block_length);
}

/// Unbiased sample probability-weighted moments b0, b1, b2.
struct Pwm {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
};

inline Pwm sample_pwm(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    Pwm m;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double i = static_cast<double>(k);  // i = rank - 1
        m.b0 += x[k];
        m.b1 += i / (n - 1.0) * x[k];
        m.b2 += i * (i - 1.0) / ((n - 1.0) * (n - 2.0)) * x[k];
    }
    m.b0 /= n;
    m.b1 /= n;
    m.b2 /= n;
    return m;
}

namespace detail {
// (c^xi - 1) / xi, continuous at xi = 0.
inline double pow_minus_one_over(double c, double xi) {
    return xi == 0.0 ? std::log(c) : std::expm1(xi * std::log(c)) / xi;
}
}  // namespace detail

/// GEV fit by probability-weighted moments. For the GEV,
///   2 b1 - b0 = sigma Gamma(1 - xi) (2^xi - 1) / xi
///   3 b2 - b0 = sigma Gamma(1 - xi) (3^xi - 1) / xi
/// so the shape solves (3^xi - 1)/(2^xi - 1) = (3 b2 - b0)/(2 b1 - b0); the
/// ratio is increasing in xi and is solved by bisection on (-5, 5).
inline GevParams pwm_fit(std::span<const double> sample) {
    if (sample.size() < 10) throw DomainError("pwm_fit: need at least 10 observations");
    const Pwm m = sample_pwm({sample.begin(), sample.end()});
    const double l2 = 2.0 * m.b1 - m.b0;
    if (!(l2 > 0.0)) throw EstimationError("pwm_fit: degenerate sample (zero spread)");
    const double target = (3.0 * m.b2 - m.b0) / l2;

    auto ratio = [](double xi) {
        return detail::pow_minus_one_over(3.0, xi) / detail::pow_minus_one_over(2.0, xi);
    };
    double lo = -5.0, hi = 5.0;
    if (!(target > ratio(lo) && target < ratio(hi)))
        throw EstimationError("pwm_fit: shape estimate outside (-5, 5)");
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (ratio(mid) < target ? lo : hi) = mid;
    }
    const double xi = 0.5 * (lo + hi);

    GevParams p;
    p.xi = xi;
    const double g = std::tgamma(1.0 - xi);
    p.sigma = l2 / (g * detail::pow_minus_one_over(2.0, xi));
    // mu = b0 - sigma (Gamma(1 - xi) - 1) / xi, with the Euler-Mascheroni limit at 0.
    const double shift = std::abs(xi) < kGumbelShapeTol ? std::numbers::egamma : (g - 1.0) / xi;
    p.mu = m.b0 - p.sigma * shift;
    if (!(std::isfinite(p.sigma) && p.sigma > 0.0 && std::isfinite(p.mu)))
        throw EstimationError("pwm_fit: no finite GEV matches the sample moments (xi >= 1?)");
    return p;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a fully specified GEV. The
/// p-value uses the asymptotic Kolmogorov law and does not correct for
/// parameters estimated from the same sample.
inline KsResult ks_test(std::span<const double> sample, const GevParams& p) {
    if (sample.size() < 10) throw DomainError("ks_test: need at least 10 observations");
    KsResult r;
    r.statistic = ks_distance({sample.begin(), sample.end()}, [&](double x) { return gev_cdf(p, x); });
    r.p_value = kolmogorov_sf(std::sqrt(static_cast<double>(sample.size())) * r.statistic);
    return r;
}

/// Rank transform of an archive to unit Frechet scale. Per member and cell,
/// over the days where the forecast is available, a positive forecast with
/// (average) rank r among those n days becomes -1/log(r/(n+1)); a zero stays 0.
/// Maps are emitted member-major, day-minor; a (day, member) map with any
/// missing cell is left out of the panel.
inline FrechetPanel rank_to_frechet(const ForecastArchive& archive) {
    const std::size_t days = archive.days(), members = archive.members(), cells = archive.cells();
    if (days == 0 || members == 0 || cells == 0) throw ValidationError("rank_to_frechet: empty archive");

    Matrix w(days * members, cells, 0.0);
    std::vector<std::string> errors(members * cells);
    parallel_for(members * cells, [&](std::size_t job) {
        const std::size_t m = job / cells, c = job % cells;
        std::vector<double> values;
        std::vector<std::size_t> day_of;
        for (std::size_t d = 0; d < days; ++d) {
            const double v = archive.at(d, m, c);
            if (!ForecastArchive::is_missing(v)) {
                values.push_back(v);
                day_of.push_back(d);
            }
        }
        if (values.empty()) {
            errors[job] = "member " + std::to_string(m) + ", cell position " + std::to_string(c);
            return;
        }
        const auto ranks = average_ranks(values);
        const double denom = static_cast<double>(values.size()) + 1.0;
        for (std::size_t k = 0; k < values.size(); ++k)
            w(m * days + day_of[k], c) = values[k] > 0.0 ? -1.0 / std::log(ranks[k] / denom) : 0.0;
    });
    for (const auto& e : errors)
        if (!e.empty()) throw ValidationError("rank_to_frechet: no available days for " + e);

    std::vector<std::size_t> keep;
    for (std::size_t m = 0; m < members; ++m)
        for (std::size_t d = 0; d < days; ++d) {
            bool complete = true;
            for (std::size_t c = 0; c < cells && complete; ++c)
                complete = !ForecastArchive::is_missing(archive.at(d, m, c));
            if (complete) keep.push_back(m * days + d);
        }
    if (keep.size() == w.rows()) return FrechetPanel{std::move(w)};
    FrechetPanel panel{Matrix(keep.size(), cells)};
    for (std::size_t i = 0; i < keep.size(); ++i) std::ranges::copy(w.row(keep[i]), panel.maps.row(i).begin());
    return panel;
}

}  // namespace maxstable
