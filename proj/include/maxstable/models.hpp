#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "maxstable/basis.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/geo.hpp"
#include "maxstable/stats.hpp"

namespace maxstable {

/// Y(s) = (1/N) max_i A_i z_i(s), A_i iid unit Frechet.
struct MaxLinearModel {
    SpectralBasis basis;
};

/// Y(s) = (1/N) U(s) (sum_i B_i z_i(s)^{1/alpha})^alpha with B_i positive
/// alpha-stable and U iid across cells with P(U <= u) = exp(-u^{-1/alpha}).
struct ReichShabyModel {
    SpectralBasis basis;
    double alpha = 0.5;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("Reich-Shaby alpha must lie in (0,1)");
    }
};

/// Y(s) = max{ a Y_noise(s), (1-a) Y_inner(s) } with iid unit Frechet noise.
struct MaxMixtureModel {
    MaxLinearModel inner;
    double a = 0.0;

    void validate() const {
        if (!(a >= 0.0 && a <= 1.0)) throw DomainError("mixture weight a must lie in [0,1]");
    }
};

/// Brown-Resnick process with variogram
///   gamma(h) = sigma2 1{h != 0} + || diag(b1, b2) R(theta_rot) h ||^beta,
/// h in planar km obtained by equirectangular projection about `origin`.
struct BrownResnickModel {
    double sigma2 = 0.0;
    double b1 = 1.0;
    double b2 = 1.0;
    double theta_rot = 0.0;
    double beta = 1.0;
    GeoPoint origin;

    void validate() const {
        if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("Brown-Resnick: sigma2 must be >= 0");
        if (!(b1 > 0.0 && b2 > 0.0) || !std::isfinite(b1) || !std::isfinite(b2))
            throw DomainError("Brown-Resnick: b1, b2 must be > 0");
        if (!(std::abs(theta_rot) < std::numbers::pi / 4.0))
            throw DomainError("Brown-Resnick: rotation must lie in (-pi/4, pi/4)");
        if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("Brown-Resnick: beta must lie in (0, 2]");
    }

    /// Variogram without the nugget jump.
    double smooth_variogram(double hx, double hy) const {
        const double c = std::cos(theta_rot), s = std::sin(theta_rot);
        const double u = b1 * (c * hx + s * hy);
        const double v = b2 * (-s * hx + c * hy);
        const double r = std::hypot(u, v);
        return r == 0.0 ? 0.0 : std::pow(r, beta);
    }

    double variogram(double hx, double hy) const {
        if (hx == 0.0 && hy == 0.0) return 0.0;
        return sigma2 + smooth_variogram(hx, hy);
    }

    double variogram(const PlanarPoint& a, const PlanarPoint& b) const { return variogram(a.x - b.x, a.y - b.y); }

    Projection projection() const { return Projection{origin}; }
};

using MaxStableModel = std::variant<MaxLinearModel, ReichShabyModel, MaxMixtureModel, BrownResnickModel>;

inline const char* model_type_name(const MaxStableModel& m) {
    switch (m.index()) {
        case 0: return "maxlinear";
        case 1: return "reichshaby";
        case 2: return "mixture";
        default: return "brownresnick";
    }
}

// --- extremal coefficients -------------------------------------------------

namespace detail {
/// Distinct cells; a site repeated in a tuple contributes once.
inline std::vector<std::size_t> distinct_cells(std::span<const std::size_t> cells) {
    std::vector<std::size_t> out(cells.begin(), cells.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}
}  // namespace detail

/// (1/N) sum_i max_k z_i(s_k).
inline double ec_maxlinear(const MaxLinearModel& m, std::span<const std::size_t> cells) {
    const auto& b = m.basis;
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double mx = 0.0;
        for (auto c : cells) mx = std::max(mx, b(i, c));
        acc += mx;
    }
    return acc / static_cast<double>(b.size());
}

inline double ec_pair_maxlinear(const MaxLinearModel& m, std::size_t s1, std::size_t s2) {
    const std::size_t cells[] = {s1, s2};
    return ec_maxlinear(m, cells);
}

namespace detail {
/// (sum_k z_k^{1/alpha})^alpha, scaled by the largest term to stay finite.
inline double power_norm(std::span<const double> z, double alpha) {
    double mx = 0.0;
    for (double v : z) mx = std::max(mx, v);
    if (mx == 0.0) return 0.0;
    double sum = 0.0;
    for (double v : z) sum += std::pow(v / mx, 1.0 / alpha);
    return mx * std::pow(sum, alpha);
}
}  // namespace detail

/// (1/N) sum_i (sum_k z_i(s_k)^{1/alpha})^alpha.
inline double ec_reichshaby(const ReichShabyModel& m, std::span<const std::size_t> sites) {
    m.validate();
    const auto cells = detail::distinct_cells(sites);
    const auto& b = m.basis;
    std::vector<double> z(cells.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t k = 0; k < cells.size(); ++k) z[k] = b(i, cells[k]);
        acc += detail::power_norm(z, m.alpha);
    }
    return acc / static_cast<double>(b.size());
}

inline double ec_pair_reichshaby(const ReichShabyModel& m, std::size_t s1, std::size_t s2) {
    const std::size_t cells[] = {s1, s2};
    return ec_reichshaby(m, cells);
}

inline double ec_triple_reichshaby(const ReichShabyModel& m, std::size_t s1, std::size_t s2, std::size_t s3) {
    const std::size_t cells[] = {s1, s2, s3};
    return ec_reichshaby(m, cells);
}

/// d a + (1 - a) theta_inner for d distinct sites (noise independent across sites).
inline double ec_mixture(const MaxMixtureModel& m, std::span<const std::size_t> sites) {
    m.validate();
    const auto cells = detail::distinct_cells(sites);
    return static_cast<double>(cells.size()) * m.a + (1.0 - m.a) * ec_maxlinear(m.inner, cells);
}

inline double ec_pair_mixture(const MaxMixtureModel& m, std::size_t s1, std::size_t s2) {
    const std::size_t cells[] = {s1, s2};
    return ec_mixture(m, cells);
}

inline double ec_triple_mixture(const MaxMixtureModel& m, std::size_t s1, std::size_t s2, std::size_t s3) {
    const std::size_t cells[] = {s1, s2, s3};
    return ec_mixture(m, cells);
}

/// Brown-Resnick pairwise coefficient 2 Phi(sqrt(gamma / 2)).
inline double ec_br_from_variogram(double gamma) { return 2.0 * normal_cdf(std::sqrt(gamma / 2.0)); }

inline double ec_pair_br(const BrownResnickModel& m, const PlanarPoint& a, const PlanarPoint& b) {
    return ec_br_from_variogram(m.variogram(a, b));
}

inline double ec_pair_br(const BrownResnickModel& m, const GeoPoint& a, const GeoPoint& b) {
    const auto proj = m.projection();
    return ec_pair_br(m, proj(a), proj(b));
}

/// Closed-form pairwise coefficient for any model. Sites are grid positions
/// for basis models; `points` supplies their coordinates for Brown-Resnick.
inline double ec_pair(const MaxStableModel& model, std::size_t s1, std::size_t s2,
                      std::span<const GeoPoint> points = {}) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MaxLinearModel>) return ec_pair_maxlinear(m, s1, s2);
            else if constexpr (std::is_same_v<T, ReichShabyModel>) return ec_pair_reichshaby(m, s1, s2);
            else if constexpr (std::is_same_v<T, MaxMixtureModel>) return ec_pair_mixture(m, s1, s2);
            else {
                if (points.empty()) throw DomainError("ec_pair: Brown-Resnick needs site coordinates");
                if (s1 == s2) return 1.0;
                return ec_pair_br(m, points[s1], points[s2]);
            }
        },
        model);
}

/// Closed-form coefficient of any number of sites for the basis models, and
/// of pairs for Brown-Resnick (higher orders have no closed form here).
inline double ec_closed_form(const MaxStableModel& model, std::span<const std::size_t> sites,
                             std::span<const GeoPoint> points = {}) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MaxLinearModel>) return ec_maxlinear(m, detail::distinct_cells(sites));
            else if constexpr (std::is_same_v<T, ReichShabyModel>) return ec_reichshaby(m, sites);
            else if constexpr (std::is_same_v<T, MaxMixtureModel>) return ec_mixture(m, sites);
            else {
                const auto cells = detail::distinct_cells(sites);
                if (cells.size() == 1) return 1.0;
                if (cells.size() != 2)
                    throw DomainError("ec_closed_form: Brown-Resnick coefficients beyond pairs need simulation");
                return ec_pair(model, cells[0], cells[1], points);
            }
        },
        model);
}

}  // namespace maxstable
