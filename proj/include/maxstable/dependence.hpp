#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "maxstable/basis.hpp"
#include "maxstable/data.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/geo.hpp"
#include "maxstable/parallel.hpp"
#include "maxstable/stats.hpp"

namespace maxstable {

/// Empirical extremal coefficient of a tuple of sites.
struct EcEstimate {
    std::vector<std::size_t> members;  // site indices, ascending
    double theta = 1.0;
    double madogram = 0.0;
    std::optional<double> distance_km;  // pairs only
};

/// Column-wise normalized ranks R/(n+1), average ranks for ties.
inline Matrix normalized_ranks(const Matrix& x) {
    Matrix u(x.rows(), x.cols());
    const double denom = static_cast<double>(x.rows()) + 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const auto col = x.column(c);
        if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); }))
            throw EstimationError("madogram: column " + std::to_string(c) + " is constant");
        const auto r = average_ranks(col);
        for (std::size_t t = 0; t < x.rows(); ++t) u(t, c) = r[t] / denom;
    }
    return u;
}

/// Multivariate F-madogram on pre-ranked data:
///   (1/n) sum_t [ max_k U_t(k) - mean_k U_t(k) ].
inline double fmadogram_from_ranks(const Matrix& ranks, std::span<const std::size_t> members) {
    const double d = static_cast<double>(members.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < ranks.rows(); ++t) {
        double mx = 0.0, sum = 0.0;
        for (auto k : members) {
            const double u = ranks(t, k);
            mx = std::max(mx, u);
            sum += u;
        }
        acc += mx - sum / d;
    }
    return acc / static_cast<double>(ranks.rows());
}

inline constexpr std::size_t kMinBlocksForMadogram = 20;

inline double empirical_fmadogram(const MaximaMatrix& maxima, std::span<const std::size_t> members) {
    if (maxima.blocks() < kMinBlocksForMadogram)
        throw DomainError("empirical_fmadogram: need at least 20 blocks");
    if (members.size() < 2) throw DomainError("empirical_fmadogram: need at least 2 sites");
    // Rank only the columns involved.
    Matrix sub(maxima.blocks(), members.size());
    for (std::size_t t = 0; t < maxima.blocks(); ++t)
        for (std::size_t k = 0; k < members.size(); ++k) sub(t, k) = maxima.values()(t, members[k]);
    const auto ranks = normalized_ranks(sub);
    std::vector<std::size_t> all(members.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fmadogram_from_ranks(ranks, all);
}

/// theta = (1 + 2 nu) / (1 - 2 nu), clipped to [1, d].
inline double ec_from_madogram(double nu, std::size_t d) {
    if (!(nu >= 0.0 && nu < 0.5)) throw DomainError("ec_from_madogram: madogram must lie in [0, 1/2)");
    const double theta = (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu);
    return std::clamp(theta, 1.0, static_cast<double>(d));
}

/// All index tuples of size `order` from [0, n), lexicographic.
inline std::vector<std::vector<std::size_t>> site_tuples(std::size_t n, std::size_t order) {
    std::vector<std::vector<std::size_t>> out;
    if (order == 0 || order > n) return out;
    std::vector<std::size_t> t(order);
    std::iota(t.begin(), t.end(), std::size_t{0});
    for (;;) {
        out.push_back(t);
        std::size_t k = order;
        while (k > 0 && t[k - 1] == n - order + k - 1) --k;
        if (k == 0) return out;
        ++t[k - 1];
        for (std::size_t j = k; j < order; ++j) t[j] = t[j - 1] + 1;
    }
}

/// Madograms and extremal coefficients for every tuple of a fixed ranked
/// sample; shared by the estimator on observed maxima and the bootstrap.
inline std::vector<EcEstimate> ec_from_ranks(const Matrix& ranks, std::size_t order) {
    auto tuples = site_tuples(ranks.cols(), order);
    std::vector<EcEstimate> out(tuples.size());
    parallel_for(tuples.size(), [&](std::size_t i) {
        auto& e = out[i];
        e.members = std::move(tuples[i]);
        e.madogram = fmadogram_from_ranks(ranks, e.members);
        // Strongly anti-dependent samples can push nu past 1/2; theta saturates at d.
        e.theta = e.madogram < 0.5 ? ec_from_madogram(e.madogram, order) : static_cast<double>(order);
    });
    return out;
}

/// Every pairwise (order 2) or triplewise (order 3) coefficient; pairs carry
/// their great-circle distance.
inline std::vector<EcEstimate> ec_cloud(const MaximaMatrix& maxima, const StationSet& stations, std::size_t order) {
    if (order != 2 && order != 3) throw DomainError("ec_cloud: order must be 2 or 3");
    if (maxima.stations() != stations.size())
        throw ValidationError("ec_cloud: maxima columns do not match station count");
    if (maxima.blocks() < kMinBlocksForMadogram) throw DomainError("ec_cloud: need at least 20 blocks");
    auto out = ec_from_ranks(normalized_ranks(maxima.values()), order);
    if (order == 2)
        for (auto& e : out) e.distance_km = haversine_km(stations[e.members[0]].pos, stations[e.members[1]].pos);
    return out;
}

/// Extremal coefficient from simulated unit Frechet fields at probability
/// level u: P(Y(s_k) <= z for all k) = u^theta with z = -1/log u.
inline double ec_from_threshold(const Matrix& fields, std::span<const std::size_t> members, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("ec_from_threshold: u must lie in (0,1)");
    if (fields.rows() == 0) throw DomainError("ec_from_threshold: no fields");
    const double z = -1.0 / std::log(u);
    std::size_t below = 0;
    for (std::size_t t = 0; t < fields.rows(); ++t) {
        bool all = true;
        for (auto k : members) all = all && fields(t, k) <= z;
        below += all;
    }
    if (below == 0) throw EstimationError("ec_from_threshold: no field below the threshold");
    return std::log(static_cast<double>(below) / static_cast<double>(fields.rows())) / std::log(u);
}

/// (1/(2N)) sum_i |z_i(s1) - z_i(s2)|, the madogram of the spectral process.
/// With per-cell mean 1 this equals the max-linear extremal coefficient minus 1.
inline double spectral_madogram(const SpectralBasis& basis, std::size_t s1, std::size_t s2) {
    double acc = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) acc += std::abs(basis(i, s1) - basis(i, s2));
    return acc / (2.0 * static_cast<double>(basis.size()));
}

}  // namespace maxstable
