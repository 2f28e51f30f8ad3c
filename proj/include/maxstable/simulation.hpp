#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "maxstable/data.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/geo.hpp"
#include "maxstable/matrix.hpp"
#include "maxstable/models.hpp"
#include "maxstable/parallel.hpp"
#include "maxstable/random.hpp"

namespace maxstable {

// --- positive stable variates ---------------------------------------------

/// log B for B positive alpha-stable with E exp(-tB) = exp(-t^alpha), by
/// Kanter's representation
///   B = sin(alpha U) / sin(U)^{1/alpha} * (sin((1-alpha) U) / E)^{(1-alpha)/alpha}
/// with U uniform on (0, pi) and E standard exponential. Returned on the log
/// scale because B is heavy tailed.
inline double log_positive_stable(Rng& rng, double alpha) {
    const double u = std::numbers::pi * rng.uniform_open();
    const double e = rng.exponential();
    return std::log(std::sin(alpha * u)) - std::log(std::sin(u)) / alpha +
           (1.0 - alpha) / alpha * (std::log(std::sin((1.0 - alpha) * u)) - std::log(e));
}

inline std::vector<double> sample_positive_stable(double alpha, std::size_t n, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("sample_positive_stable: alpha must lie in (0,1)");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& b : out) b = std::exp(log_positive_stable(rng, alpha));
    return out;
}

namespace detail {
inline std::vector<std::size_t> resolve_cells(std::span<const std::size_t> cells, std::size_t n_cells) {
    if (cells.empty()) {
        std::vector<std::size_t> all(n_cells);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }
    for (auto c : cells)
        if (c >= n_cells) throw DomainError("simulation: cell position out of range");
    return {cells.begin(), cells.end()};
}

inline void require_fields(std::size_t n_fields) {
    if (n_fields < 1) throw DomainError("simulation: n_fields must be >= 1");
}

/// One max-linear field written into `out` (cells as given).
inline void maxlinear_field(const SpectralBasis& b, std::span<const std::size_t> cells, Rng& rng,
                            std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double a = rng.unit_frechet();
        const auto z = b.functions.row(i);
        for (std::size_t k = 0; k < cells.size(); ++k) out[k] = std::max(out[k], a * z[cells[k]]);
    }
    const double inv_n = 1.0 / static_cast<double>(b.size());
    for (auto& y : out) y *= inv_n;
}
}  // namespace detail

// --- basis models ----------------------------------------------------------
//
// All simulators return n_fields x |cells| matrices (all grid cells when
// `cells` is empty). Field k draws from substream (seed, k).

inline Matrix simulate_maxlinear(const MaxLinearModel& m, std::size_t n_fields, std::uint64_t seed,
                                 std::span<const std::size_t> cells = {}) {
    detail::require_fields(n_fields);
    const auto sites = detail::resolve_cells(cells, m.basis.cells());
    Matrix out(n_fields, sites.size());
    parallel_for(n_fields, [&](std::size_t k) {
        Rng rng(substream(seed, {k}));
        detail::maxlinear_field(m.basis, sites, rng, out.row(k));
    });
    return out;
}

inline Matrix simulate_reichshaby(const ReichShabyModel& m, std::size_t n_fields, std::uint64_t seed,
                                  std::span<const std::size_t> cells = {}) {
    m.validate();
    detail::require_fields(n_fields);
    const auto sites = detail::resolve_cells(cells, m.basis.cells());
    const std::size_t n = m.basis.size();
    const double alpha = m.alpha;
    const double neg_inf = -std::numeric_limits<double>::infinity();

    // log z_i(s) / alpha, -inf where the basis vanishes.
    Matrix scaled_log(n, sites.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < sites.size(); ++k) {
            const double z = m.basis(i, sites[k]);
            scaled_log(i, k) = z > 0.0 ? std::log(z) / alpha : neg_inf;
        }
    const double log_n = std::log(static_cast<double>(n));

    Matrix out(n_fields, sites.size());
    parallel_for(n_fields, [&](std::size_t f) {
        Rng rng(substream(seed, {f}));
        std::vector<double> log_b(n);
        for (auto& lb : log_b) lb = log_positive_stable(rng, alpha);
        auto row = out.row(f);
        for (std::size_t k = 0; k < sites.size(); ++k) {
            double mx = neg_inf;
            for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, log_b[i] + scaled_log(i, k));
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += std::exp(log_b[i] + scaled_log(i, k) - mx);
            // U = E^{-alpha} has P(U <= u) = exp(-u^{-1/alpha}).
            const double log_u = -alpha * std::log(rng.exponential());
            row[k] = std::exp(alpha * (mx + std::log(sum)) - log_n + log_u);
        }
    });
    return out;
}

inline Matrix simulate_mixture(const MaxMixtureModel& m, std::size_t n_fields, std::uint64_t seed,
                               std::span<const std::size_t> cells = {}) {
    m.validate();
    detail::require_fields(n_fields);
    const auto sites = detail::resolve_cells(cells, m.inner.basis.cells());
    Matrix out(n_fields, sites.size());
    parallel_for(n_fields, [&](std::size_t f) {
        Rng rng(substream(seed, {f}));
        auto row = out.row(f);
        detail::maxlinear_field(m.inner.basis, sites, rng, row);
        // Noise is indexed by cell so repeated cells share one draw.
        std::vector<std::pair<std::size_t, double>> noise;
        for (std::size_t k = 0; k < sites.size(); ++k) {
            auto it = std::find_if(noise.begin(), noise.end(), [&](const auto& p) { return p.first == sites[k]; });
            double eps;
            if (it != noise.end()) {
                eps = it->second;
            } else {
                eps = rng.unit_frechet();
                noise.emplace_back(sites[k], eps);
            }
            row[k] = std::max(m.a * eps, (1.0 - m.a) * row[k]);
        }
    });
    return out;
}

// --- extremal functions for log-Gaussian spectral processes ---------------

/// Exact simulation of a max-stable vector whose spectral functions are
/// log-Gaussian, Z(x) = exp(G(x) - Var G(x) / 2), by the extremal-functions
/// method. Conditionally on being the k-th extremal function the normalized
/// spectral function is exp(G(x) - G(x_k) - V(x, x_k)) with
/// V(a, b) = Var(G(a) - G(b)) / 2, for any Gaussian G with that variogram.
///
/// Points are processed in index order; G is produced by a lower-triangular
/// factor so G(x_0..x_k) only needs the first k+1 normals. A candidate is
/// rejected as soon as it reaches or exceeds the running maximum at an
/// earlier point; its nearest predecessors (by V) are checked first.
class ExtremalFunctionSampler {
public:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    /// `covariance` of G (any anchoring) and its half-variogram matrix.
    ExtremalFunctionSampler(const Eigen::MatrixXd& covariance, RowMatrix half_variogram,
                            const std::string& context = "")
        : v_(std::move(half_variogram)) {
        const auto m = covariance.rows();
        if (covariance.cols() != m || v_.rows() != m || v_.cols() != m)
            throw DomainError("ExtremalFunctionSampler: dimension mismatch");
        Eigen::MatrixXd jittered = covariance;
        jittered.diagonal().array() += kJitter;
        Eigen::LLT<Eigen::MatrixXd> llt(jittered);
        if (llt.info() != Eigen::Success)
            throw NumericalError("covariance not positive definite after jitter" +
                                 (context.empty() ? std::string() : " (" + context + ")"));
        l_ = llt.matrixL();
        const Eigen::Index n = m;
        neighbours_.resize(static_cast<std::size_t>(n));
        for (Eigen::Index k = 1; k < n; ++k) {
            std::vector<Eigen::Index> prev(static_cast<std::size_t>(k));
            std::iota(prev.begin(), prev.end(), Eigen::Index{0});
            const auto take = std::min<std::size_t>(kNeighbours, prev.size());
            std::partial_sort(prev.begin(), prev.begin() + static_cast<std::ptrdiff_t>(take), prev.end(),
                              [&](Eigen::Index a, Eigen::Index b) {
                                  return v_(a, k) < v_(b, k) || (v_(a, k) == v_(b, k) && a < b);
                              });
            prev.resize(take);
            neighbours_[static_cast<std::size_t>(k)] = std::move(prev);
        }
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(l_.rows()); }

    /// One realization (unit Frechet margins) written to `out`.
    void sample(Rng& rng, std::span<double> out) const {
        const Eigen::Index m = l_.rows();
        Eigen::VectorXd g(m);
        std::vector<double> gval(static_cast<std::size_t>(m));
        std::vector<std::uint64_t> stamp(static_cast<std::size_t>(m), 0);
        std::uint64_t gen = 0;
        std::fill(out.begin(), out.end(), 0.0);

        auto gaussian_at = [&](Eigen::Index j) {
            const auto sj = static_cast<std::size_t>(j);
            if (stamp[sj] != gen) {
                gval[sj] = l_.row(j).head(j + 1).dot(g.head(j + 1));
                stamp[sj] = gen;
            }
            return gval[sj];
        };

        for (Eigen::Index k = 0; k < m; ++k) {
            double arrival = rng.exponential();
            while (1.0 / arrival > out[static_cast<std::size_t>(k)]) {
                ++gen;
                const double inv = 1.0 / arrival;
                for (Eigen::Index l = 0; l <= k; ++l) g(l) = rng.normal();
                const double gk = gaussian_at(k);
                auto dominated = [&](Eigen::Index j) {
                    return std::exp(gaussian_at(j) - gk - v_(j, k)) * inv >= out[static_cast<std::size_t>(j)];
                };
                bool accept = true;
                for (auto j : neighbours_[static_cast<std::size_t>(k)])
                    if (dominated(j)) {
                        accept = false;
                        break;
                    }
                for (Eigen::Index j = 0; accept && j < k; ++j)
                    if (dominated(j)) accept = false;
                if (accept) {
                    for (Eigen::Index l = k + 1; l < m; ++l) g(l) = rng.normal();
                    for (Eigen::Index a = k; a < m; ++a) {
                        const double z = std::exp(gaussian_at(a) - gk - v_(a, k)) * inv;
                        auto& y = out[static_cast<std::size_t>(a)];
                        y = std::max(y, z);
                    }
                }
                arrival += rng.exponential();
            }
        }
    }

    static constexpr double kJitter = 1e-10;
    static constexpr std::size_t kNeighbours = 8;

private:
    RowMatrix l_;
    RowMatrix v_;
    std::vector<std::vector<Eigen::Index>> neighbours_;
};

/// Dense-covariance path limit for Brown-Resnick simulation.
inline constexpr std::size_t kMaxBrownResnickCells = 5000;

/// Sampler for a Brown-Resnick model at planar points. W is anchored at the
/// first point: C(s,t) = gamma(s - s0) + gamma(t - s0) - gamma(s - t); the
/// nugget is part of gamma and hence of C.
inline ExtremalFunctionSampler make_br_sampler(const BrownResnickModel& m, std::span<const PlanarPoint> pts) {
    m.validate();
    const auto n = static_cast<Eigen::Index>(pts.size());
    if (pts.empty()) throw DomainError("simulate_br: empty grid");
    if (pts.size() > kMaxBrownResnickCells)
        throw DomainError("simulate_br: grid exceeds the dense-covariance limit of 5000 cells");
    ExtremalFunctionSampler::RowMatrix v(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) v(a, b) = m.variogram(pts[a], pts[b]);
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) c(a, b) = v(a, 0) + v(b, 0) - v(a, b);
    std::ostringstream ctx;
    ctx << "sigma2=" << m.sigma2 << " b1=" << m.b1 << " b2=" << m.b2 << " theta=" << m.theta_rot
        << " beta=" << m.beta;
    return ExtremalFunctionSampler(c, std::move(v), ctx.str());
}

inline Matrix simulate_extremal(const ExtremalFunctionSampler& sampler, std::size_t n_fields, std::uint64_t seed) {
    detail::require_fields(n_fields);
    Matrix out(n_fields, sampler.size());
    parallel_for(n_fields, [&](std::size_t k) {
        Rng rng(substream(seed, {k}));
        sampler.sample(rng, out.row(k));
    });
    return out;
}

inline Matrix simulate_br(const BrownResnickModel& m, const GridSpec& grid, std::size_t n_fields,
                          std::uint64_t seed) {
    const auto pts = m.projection()(grid.points());
    return simulate_extremal(make_br_sampler(m, pts), n_fields, seed);
}

/// Simulates any model at the given grid positions (all cells when empty).
/// Repeated positions receive identical values.
inline Matrix simulate(const MaxStableModel& model, const GridSpec& grid, std::size_t n_fields,
                       std::uint64_t seed, std::span<const std::size_t> cells = {}) {
    return std::visit(
        [&](const auto& m) -> Matrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MaxLinearModel>) return simulate_maxlinear(m, n_fields, seed, cells);
            else if constexpr (std::is_same_v<T, ReichShabyModel>) {
                // U(s) is per cell: simulate distinct cells, then expand.
                const auto sites = detail::resolve_cells(cells, m.basis.cells());
                const auto uniq = detail::distinct_cells(sites);
                const auto f = simulate_reichshaby(m, n_fields, seed, uniq);
                Matrix out(n_fields, sites.size());
                for (std::size_t k = 0; k < sites.size(); ++k) {
                    const auto col = static_cast<std::size_t>(
                        std::lower_bound(uniq.begin(), uniq.end(), sites[k]) - uniq.begin());
                    for (std::size_t r = 0; r < n_fields; ++r) out(r, k) = f(r, col);
                }
                return out;
            } else if constexpr (std::is_same_v<T, MaxMixtureModel>) return simulate_mixture(m, n_fields, seed, cells);
            else {
                const auto sites = detail::resolve_cells(cells, grid.size());
                const auto uniq = detail::distinct_cells(sites);
                const auto f = simulate_br(m, grid.subset(uniq), n_fields, seed);
                Matrix out(n_fields, sites.size());
                for (std::size_t k = 0; k < sites.size(); ++k) {
                    const auto col = static_cast<std::size_t>(
                        std::lower_bound(uniq.begin(), uniq.end(), sites[k]) - uniq.begin());
                    for (std::size_t r = 0; r < n_fields; ++r) out(r, k) = f(r, col);
                }
                return out;
            }
        },
        model);
}

}  // namespace maxstable
