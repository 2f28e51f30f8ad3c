#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "maxstable/data.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/geo.hpp"
#include "maxstable/marginals.hpp"
#include "maxstable/matrix.hpp"
#include "maxstable/models.hpp"
#include "maxstable/parallel.hpp"
#include "maxstable/random.hpp"
#include "maxstable/simulation.hpp"

namespace maxstable {

struct ScenarioConfig {
    std::size_t nx = 20, ny = 20;  // cells per axis
    double spacing = 0.1;           // degrees
    GeoPoint corner{2.0, 43.0};     // centre of cell 0
    std::size_t n_stations = 15;
    std::size_t n_days = 1200;
    std::size_t n_members = 8;
    std::size_t block_length = 18;
    BrownResnickModel truth{0.1, 0.02, 0.05, 0.3, 1.0, {}};
    double rho = 0.2;  // weight of the member noise in rank space
    double p0 = 0.0;   // zero-rain probability on low-intensity days
    std::vector<GevParams> gev{GevParams{10.0, 2.0, 0.2}};  // one entry, or one per station
    std::uint64_t seed = 1;

    void validate() const {
        if (nx * ny < 4) throw DomainError("scenario: grid needs at least 4 cells");
        if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("scenario: spacing must be > 0");
        if (n_stations < 3) throw DomainError("scenario: need at least 3 stations");
        if (n_stations > nx * ny) throw DomainError("scenario: more stations than grid cells");
        if (block_length < 1) throw DomainError("scenario: block_length must be >= 1");
        if (n_days < block_length) throw DomainError("scenario: fewer days than one block");
        if (n_members < 1) throw DomainError("scenario: need at least 1 member");
        if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("scenario: rho must lie in [0,1]");
        if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("scenario: p0 must lie in [0,1)");
        if (gev.size() != 1 && gev.size() != n_stations)
            throw DomainError("scenario: give one GEV or one per station");
        for (const auto& g : gev) g.validate();
        BrownResnickModel t = truth;
        t.validate();
    }

    const GevParams& gev_for(std::size_t station) const { return gev.size() == 1 ? gev[0] : gev[station]; }
};

struct TruthPair {
    std::size_t i = 0, j = 0;  // station indices
    double distance_km = 0.0;
    double theta = 1.0;
};

struct ScenarioTruth {
    BrownResnickModel model;  // origin = centroid of the station cells
    std::vector<GevParams> gev;
    std::vector<TruthPair> pairs;
};

struct Scenario {
    GridSpec grid;
    StationSet stations;
    std::vector<std::size_t> station_cells;
    ForecastArchive forecasts;
    Matrix station_daily;  // days x stations, mm
    MaximaMatrix maxima;
    ScenarioTruth truth;
};

namespace detail {
/// Fixed monotone map from rank space to a precipitation-like amount (mm).
inline double rank_to_amount(double u) { return 8.0 * std::pow(-std::log1p(-u), 1.3); }

/// 40% quantile of the unit Frechet law; days below it are "low intensity".
inline double low_intensity_level() { return -1.0 / std::log(0.4); }

/// Gaussian covariance of W(x) - W(o) with stationary increments, given the
/// smooth (nugget-free) semivariogram, plus `nugget` on the diagonal of the
/// first `n_nugget` points; half-variograms follow from the covariance.
inline std::pair<Eigen::MatrixXd, ExtremalFunctionSampler::RowMatrix>
joint_gaussian(const BrownResnickModel& smooth, std::span<const PlanarPoint> pts, std::size_t n_nugget, double nugget) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    const PlanarPoint o = pts.back();
    auto g = [&](const PlanarPoint& a, const PlanarPoint& b) { return smooth.smooth_variogram(a.x - b.x, a.y - b.y); };
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) c(a, b) = g(pts[a], o) + g(pts[b], o) - g(pts[a], pts[b]);
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(n_nugget); ++a) c(a, a) += nugget;
    ExtremalFunctionSampler::RowMatrix v(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) v(a, b) = a == b ? 0.0 : 0.5 * (c(a, a) + c(b, b) - 2.0 * c(a, b));
    return {std::move(c), std::move(v)};
}
}  // namespace detail

/// Synthetic stations and forecasts sharing one latent max-stable day.
///
/// Each day a max-stable vector is drawn jointly at the station cells and
/// the grid cells. Its spectral field is log-Gaussian: a smooth Gaussian
/// field with the truth's nugget-free variogram, plus independent noise of
/// variance sigma2 at the station entries. The station entries are thus
/// exactly Brown-Resnick with the truth variogram, and the grid entries are
/// Brown-Resnick with its smooth part.
///
/// Station days are mapped to mm so that block maxima follow the configured
/// GEV exactly. Members blend the grid day with an independent field of the
/// same law in rank space and map the blend to mm by a fixed monotone curve.
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Scenario sc;

    std::vector<Cell> cells;
    for (std::size_t iy = 0; iy < cfg.ny; ++iy)
        for (std::size_t ix = 0; ix < cfg.nx; ++ix)
            cells.push_back({static_cast<std::int64_t>(iy * cfg.nx + ix),
                             {cfg.corner.lon + cfg.spacing * static_cast<double>(ix),
                              cfg.corner.lat + cfg.spacing * static_cast<double>(iy)}});
    sc.grid = GridSpec(std::move(cells), cfg.spacing);
    const std::size_t n_cells = sc.grid.size();

    // Stations in distinct cells, jittered inside them.
    Rng layout(substream(cfg.seed, {0}));
    std::vector<std::size_t> perm(n_cells);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < cfg.n_stations; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(layout.uniform() * static_cast<double>(n_cells - i));
        std::swap(perm[i], perm[std::min(j, n_cells - 1)]);
    }
    sc.station_cells.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cfg.n_stations));
    std::vector<Station> stations;
    for (std::size_t i = 0; i < cfg.n_stations; ++i) {
        const auto& c = sc.grid[sc.station_cells[i]].pos;
        const double dx = (layout.uniform() - 0.5) * 0.8 * cfg.spacing;
        const double dy = (layout.uniform() - 0.5) * 0.8 * cfg.spacing;
        stations.push_back({static_cast<std::int64_t>(i), {c.lon + dx, c.lat + dy}});
    }
    sc.stations = StationSet(std::move(stations));

    // Station dependence is defined at the cell centres.
    std::vector<GeoPoint> station_pts;
    for (auto c : sc.station_cells) station_pts.push_back(sc.grid[c].pos);
    sc.truth.model = cfg.truth;
    sc.truth.model.origin = centroid(station_pts);
    for (std::size_t i = 0; i < cfg.n_stations; ++i) sc.truth.gev.push_back(cfg.gev_for(i));
    for (std::size_t i = 0; i < cfg.n_stations; ++i)
        for (std::size_t j = i + 1; j < cfg.n_stations; ++j)
            sc.truth.pairs.push_back({i, j, haversine_km(station_pts[i], station_pts[j]),
                                      ec_pair_br(sc.truth.model, station_pts[i], station_pts[j])});

    const auto proj = sc.truth.model.projection();
    std::vector<PlanarPoint> joint_pts = proj(station_pts);
    const auto grid_pts = proj(sc.grid.points());
    joint_pts.insert(joint_pts.end(), grid_pts.begin(), grid_pts.end());
    auto [cov, half_vario] = detail::joint_gaussian(sc.truth.model, joint_pts, cfg.n_stations, cfg.truth.sigma2);
    const ExtremalFunctionSampler joint(cov, std::move(half_vario), "scenario joint field");

    BrownResnickModel smooth = sc.truth.model;
    smooth.sigma2 = 0.0;
    const auto noise_sampler = make_br_sampler(smooth, grid_pts);

    const double low = detail::low_intensity_level();
    const double block = static_cast<double>(cfg.block_length);
    sc.station_daily = Matrix(cfg.n_days, cfg.n_stations);
    sc.forecasts = ForecastArchive(cfg.n_days, cfg.n_members, n_cells);
    parallel_for(cfg.n_days, [&](std::size_t t) {
        Rng rng(substream(cfg.seed, {1, t}));
        std::vector<double> y(joint.size());
        joint.sample(rng, y);

        Rng thin(substream(cfg.seed, {2, t}));
        for (std::size_t s = 0; s < cfg.n_stations; ++s) {
            const bool dry = y[s] < low && thin.uniform() < cfg.p0;
            // Daily law G^{1/L} so that the maximum of L days is G.
            const double v = gev_quantile(cfg.gev_for(s), std::exp(-block / y[s]));
            sc.station_daily(t, s) = dry ? 0.0 : std::max(v, 0.0);
        }

        std::vector<double> noise(n_cells);
        for (std::size_t m = 0; m < cfg.n_members; ++m) {
            Rng nrng(substream(cfg.seed, {3, t, m}));
            if (cfg.rho > 0.0) noise_sampler.sample(nrng, noise);
            for (std::size_t c = 0; c < n_cells; ++c) {
                const double u_lat = std::exp(-1.0 / y[cfg.n_stations + c]);
                const double u_noise = cfg.rho > 0.0 ? std::exp(-1.0 / noise[c]) : 0.0;
                const double u = (1.0 - cfg.rho) * u_lat + cfg.rho * u_noise;
                const bool dry = u < 0.4 && thin.uniform() < cfg.p0;
                sc.forecasts.at(t, m, c) = dry ? 0.0 : detail::rank_to_amount(u);
            }
        }
    });

    sc.maxima = block_maxima(sc.station_daily, cfg.block_length);
    return sc;
}

}  // namespace maxstable
