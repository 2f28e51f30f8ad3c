#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxstable/basis.hpp"
#include "maxstable/dependence.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/geo.hpp"
#include "maxstable/models.hpp"
#include "maxstable/optimize.hpp"
#include "maxstable/parallel.hpp"
#include "maxstable/simulation.hpp"
#include "maxstable/stats.hpp"

namespace maxstable {

/// sqrt(mean((theoretical - empirical)^2)).
inline double rmse(std::span<const double> theoretical, std::span<const double> empirical) {
    if (theoretical.size() != empirical.size()) throw DomainError("rmse: length mismatch");
    if (theoretical.empty()) throw DomainError("rmse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < theoretical.size(); ++i) {
        const double r = theoretical[i] - empirical[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(theoretical.size()));
}

struct FitResult {
    MaxStableModel model;
    double rmse = 0.0;
    std::size_t evaluations = 0;
    std::vector<double> residuals;  // model minus empirical, per input pair
    std::vector<std::string> warnings;
    std::optional<std::size_t> start_index;  // winning multistart (Model E)

    std::size_t n_pairs() const noexcept { return residuals.size(); }
};

namespace detail {
inline void require_pairs(std::span<const EcEstimate> empirical, std::size_t n_stations) {
    if (empirical.empty()) throw DomainError("fit: empirical coefficient set is empty");
    for (const auto& e : empirical) {
        if (e.members.size() != 2) throw DomainError("fit: only pairwise coefficients can be fitted");
        if (e.members[0] >= n_stations || e.members[1] >= n_stations)
            throw ValidationError("fit: pair refers to an unknown station index");
    }
}

inline std::vector<double> empirical_thetas(std::span<const EcEstimate> empirical) {
    std::vector<double> out;
    out.reserve(empirical.size());
    for (const auto& e : empirical) out.push_back(e.theta);
    return out;
}

inline FitResult finish_fit(MaxStableModel model, const std::vector<double>& theory,
                            const std::vector<double>& observed, std::size_t evaluations) {
    FitResult r{std::move(model), 0.0, evaluations, {}, {}, std::nullopt};
    r.residuals.resize(theory.size());
    for (std::size_t i = 0; i < theory.size(); ++i) r.residuals[i] = theory[i] - observed[i];
    r.rmse = rmse(theory, observed);
    return r;
}
}  // namespace detail

/// Models A and B have no free parameter; their "fit" is the rmse of the
/// max-linear coefficients against the empirical ones.
inline FitResult evaluate_maxlinear(const SpectralBasis& basis, std::span<const EcEstimate> empirical,
                                    std::span<const std::size_t> station_cells) {
    detail::require_pairs(empirical, station_cells.size());
    const auto observed = detail::empirical_thetas(empirical);
    const MaxLinearModel m{basis};
    std::vector<double> theory;
    for (const auto& e : empirical)
        theory.push_back(ec_pair_maxlinear(m, station_cells[e.members[0]], station_cells[e.members[1]]));
    return detail::finish_fit(m, theory, observed, 1);
}

/// Reich-Shaby coefficients of every pair at a given alpha, with the basis
/// columns gathered once.
class ReichShabyPairs {
public:
    ReichShabyPairs(const SpectralBasis& basis, std::span<const EcEstimate> pairs,
                    std::span<const std::size_t> station_cells)
        : basis_(&basis) {
        for (const auto& e : pairs)
            cells_.emplace_back(station_cells[e.members[0]], station_cells[e.members[1]]);
    }

    std::vector<double> thetas(double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("Reich-Shaby alpha must lie in (0,1)");
        std::vector<double> out;
        out.reserve(cells_.size());
        for (auto [a, b] : cells_) out.push_back(a == b ? 1.0 : pair_theta(alpha, a, b));
        return out;
    }

private:
    double pair_theta(double alpha, std::size_t a, std::size_t b) const {
        const auto& z = *basis_;
        const double inv_alpha = 1.0 / alpha;
        double acc = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double za = z(i, a), zb = z(i, b);
            const double mx = std::max(za, zb);
            if (mx == 0.0) continue;
            acc += mx * std::pow(std::pow(za / mx, inv_alpha) + std::pow(zb / mx, inv_alpha), alpha);
        }
        return acc / static_cast<double>(z.size());
    }

    const SpectralBasis* basis_;
    std::vector<std::pair<std::size_t, std::size_t>> cells_;
};

inline constexpr double kAlphaRefineTol = 1e-9;

/// Model C: alpha minimizing the pairwise rmse, by a grid over
/// {0.01, ..., 0.99} followed by golden-section refinement within one grid
/// step of the best grid point. The returned rmse never exceeds the best grid
/// value.
inline FitResult fit_model_C(const SpectralBasis& basis, std::span<const EcEstimate> empirical,
                             std::span<const std::size_t> station_cells) {
    detail::require_pairs(empirical, station_cells.size());
    const auto observed = detail::empirical_thetas(empirical);
    const ReichShabyPairs pairs(basis, empirical, station_cells);
    auto objective = [&](double alpha) { return rmse(pairs.thetas(alpha), observed); };

    constexpr std::size_t kGrid = 99;
    std::vector<double> grid_rmse(kGrid);
    parallel_for(kGrid, [&](std::size_t i) { grid_rmse[i] = objective(0.01 * static_cast<double>(i + 1)); });
    const auto best = static_cast<std::size_t>(std::min_element(grid_rmse.begin(), grid_rmse.end()) - grid_rmse.begin());
    const double alpha_grid = 0.01 * static_cast<double>(best + 1);

    const double lo = std::max(alpha_grid - 0.01, 1e-6), hi = std::min(alpha_grid + 0.01, 1.0 - 1e-6);
    const auto refined = optimize::golden_section(objective, lo, hi, kAlphaRefineTol);
    const double alpha = refined.value <= grid_rmse[best] ? refined.x : alpha_grid;

    auto r = detail::finish_fit(ReichShabyModel{basis, alpha}, pairs.thetas(alpha), observed,
                                kGrid + refined.evaluations + 1);
    if (best == 0 || best == kGrid - 1)
        r.warnings.push_back("alpha at the edge of the search grid (" + std::to_string(alpha_grid) + ")");
    return r;
}

/// Model D: theta_D = d a + (1 - a) theta_B is linear in a, so the least
/// squares weight is closed form, clipped to [0, 1]. d is 2 for a pair and 1
/// when both stations fall in the same cell.
inline FitResult fit_model_D(const SpectralBasis& basis, std::span<const EcEstimate> empirical,
                             std::span<const std::size_t> station_cells) {
    detail::require_pairs(empirical, station_cells.size());
    const auto observed = detail::empirical_thetas(empirical);
    const MaxLinearModel inner{basis};
    std::vector<double> theta_b, d;
    for (const auto& e : empirical) {
        const auto a = station_cells[e.members[0]], b = station_cells[e.members[1]];
        theta_b.push_back(a == b ? 1.0 : ec_pair_maxlinear(inner, a, b));
        d.push_back(a == b ? 1.0 : 2.0);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double slope = d[i] - theta_b[i];
        num += slope * (observed[i] - theta_b[i]);
        den += slope * slope;
    }
    if (!(den > 0.0)) throw EstimationError("fit_model_D: degenerate fit, theta_B = 2 for every pair");
    const double a = std::clamp(num / den, 0.0, 1.0);
    std::vector<double> theory(observed.size());
    for (std::size_t i = 0; i < theory.size(); ++i) theory[i] = d[i] * a + (1.0 - a) * theta_b[i];
    return detail::finish_fit(MaxMixtureModel{inner, a}, theory, observed, 1);
}

/// Unconstrained coordinates for the Brown-Resnick parameters:
/// log sigma2, log b1, log b2, tan(2 theta_rot), logit(beta / 2).
struct BrownResnickCoordinates {
    static BrownResnickModel to_model(std::span<const double> x, GeoPoint origin) {
        BrownResnickModel m;
        m.sigma2 = std::exp(x[0]);
        m.b1 = std::exp(x[1]);
        m.b2 = std::exp(x[2]);
        m.theta_rot = std::atan(x[3]) / 2.0;
        m.beta = 2.0 / (1.0 + std::exp(-x[4]));
        m.origin = origin;
        return m;
    }

    static std::vector<double> from_model(const BrownResnickModel& m) {
        return {std::log(m.sigma2), std::log(m.b1), std::log(m.b2), std::tan(2.0 * m.theta_rot),
                std::log(m.beta / (2.0 - m.beta))};
    }
};

struct ModelEOptions {
    std::size_t multistarts = 16;
    optimize::SimplexOptions simplex{};
};

/// Model E: the five variogram parameters minimizing the pairwise rmse, by
/// Nelder-Mead in unconstrained coordinates from Halton-spread starts. Sites
/// are projected about their centroid.
inline FitResult fit_model_E(std::span<const EcEstimate> empirical, std::span<const GeoPoint> station_coords,
                             const ModelEOptions& opt = {}) {
    detail::require_pairs(empirical, station_coords.size());
    if (empirical.size() < 5) throw DomainError("fit_model_E: need at least 5 pairs");
    const auto observed = detail::empirical_thetas(empirical);
    const GeoPoint origin = centroid(station_coords);
    const auto planar = Projection{origin}(station_coords);

    std::vector<std::pair<double, double>> lags;
    double d_min = std::numeric_limits<double>::infinity(), d_max = 0.0;
    for (const auto& e : empirical) {
        const auto& p = planar[e.members[0]];
        const auto& q = planar[e.members[1]];
        lags.emplace_back(p.x - q.x, p.y - q.y);
        const double h = std::hypot(p.x - q.x, p.y - q.y);
        if (h > 0.0) {
            d_min = std::min(d_min, h);
            d_max = std::max(d_max, h);
        }
    }
    if (!(d_max > d_min * (1.0 + 1e-9))) throw DomainError("fit_model_E: need pairs at two or more distinct distances");

    auto thetas = [&](const BrownResnickModel& m) {
        std::vector<double> out(lags.size());
        for (std::size_t i = 0; i < lags.size(); ++i)
            out[i] = ec_br_from_variogram(m.variogram(lags[i].first, lags[i].second));
        return out;
    };
    auto objective = [&](const std::vector<double>& x) {
        return rmse(thetas(BrownResnickCoordinates::to_model(x, origin)), observed);
    };

    // Start boxes: nugget 1e-4..1, scale so that b * distance spans 0.1..10.
    const double lb_lo = std::log(0.1 / d_max), lb_hi = std::log(10.0 / d_min);
    auto start_point = [&](std::size_t s) {
        const auto u = optimize::halton(s, 5);
        BrownResnickModel m;
        m.sigma2 = std::exp(std::log(1e-4) + u[0] * (std::log(1.0) - std::log(1e-4)));
        m.b1 = std::exp(lb_lo + u[1] * (lb_hi - lb_lo));
        m.b2 = std::exp(lb_lo + u[2] * (lb_hi - lb_lo));
        m.theta_rot = (u[3] - 0.5) * 0.9 * std::numbers::pi / 2.0;
        m.beta = 0.2 + 1.7 * u[4];
        return BrownResnickCoordinates::from_model(m);
    };

    std::vector<optimize::SimplexMinimum> runs(opt.multistarts);
    parallel_for(opt.multistarts, [&](std::size_t s) { runs[s] = optimize::nelder_mead(objective, start_point(s), opt.simplex); });

    std::size_t best = 0, evaluations = 0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        evaluations += runs[s].evaluations;
        if (runs[s].value < runs[best].value) best = s;
    }
    const auto model = BrownResnickCoordinates::to_model(runs[best].x, origin);
    auto r = detail::finish_fit(model, thetas(model), observed, evaluations);
    r.start_index = best;
    if (!runs[best].converged) r.warnings.push_back("best simplex run stopped on the evaluation budget");
    return r;
}

// --- parametric bootstrap --------------------------------------------------

struct BootstrapEnvelope {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // station indices
    std::vector<double> q_low, q_high;
    std::size_t n_replicates = 0;
    std::size_t n_blocks = 0;
};

inline constexpr std::size_t kDefaultReplicates = 500;
inline constexpr std::size_t kDefaultBootstrapBlocks = 190;

/// Per-pair 2.5% and 97.5% quantiles (type 7) of the madogram-based theta
/// over `n_replicates` samples of `n_blocks` fields simulated at the station
/// cells. Replicate r draws from substream (seed, r).
inline BootstrapEnvelope parametric_bootstrap(const MaxStableModel& model, const GridSpec& grid,
                                              std::span<const std::size_t> station_cells,
                                              std::size_t n_replicates = kDefaultReplicates,
                                              std::size_t n_blocks = kDefaultBootstrapBlocks,
                                              std::uint64_t seed = 0) {
    if (n_replicates < 1 || n_blocks < 1) throw DomainError("parametric_bootstrap: counts must be >= 1");
    if (station_cells.size() < 2) throw DomainError("parametric_bootstrap: need at least 2 stations");
    if (n_blocks < kMinBlocksForMadogram) throw DomainError("parametric_bootstrap: need at least 20 blocks");
    const auto tuples = site_tuples(station_cells.size(), 2);
    Matrix theta(n_replicates, tuples.size());
    parallel_for(n_replicates, [&](std::size_t r) {
        const auto fields = simulate(model, grid, n_blocks, substream(seed, {r}), station_cells);
        const auto est = ec_from_ranks(normalized_ranks(fields), 2);
        for (std::size_t p = 0; p < est.size(); ++p) theta(r, p) = est[p].theta;
    });
    BootstrapEnvelope env;
    env.n_replicates = n_replicates;
    env.n_blocks = n_blocks;
    for (std::size_t p = 0; p < tuples.size(); ++p) {
        env.pairs.emplace_back(tuples[p][0], tuples[p][1]);
        const auto col = theta.column(p);
        env.q_low.push_back(quantile_type7(col, 0.025));
        env.q_high.push_back(quantile_type7(col, 0.975));
    }
    return env;
}

}  // namespace maxstable
