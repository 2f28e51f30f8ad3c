#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace maxstable;

namespace {
ScenarioConfig small_config() {
    ScenarioConfig c;
    c.nx = 6;
    c.ny = 5;
    c.n_stations = 5;
    c.n_days = 180;
    c.n_members = 3;
    c.seed = 42;
    return c;
}
}  // namespace

TEST(Synth, Shapes) {
    const auto c = small_config();
    const auto sc = generate_scenario(c);
    EXPECT_EQ(sc.grid.size(), 30u);
    EXPECT_EQ(sc.stations.size(), 5u);
    EXPECT_EQ(sc.forecasts.days(), 180u);
    EXPECT_EQ(sc.forecasts.members(), 3u);
    EXPECT_EQ(sc.maxima.blocks(), 10u);
    EXPECT_EQ(sc.maxima.block_length(), 18u);
    EXPECT_EQ(sc.truth.pairs.size(), 10u);
    EXPECT_EQ(sc.forecasts.missing_count(), 0u);
    sc.forecasts.validate();
}

TEST(Synth, StationsSitInDistinctCells) {
    const auto sc = generate_scenario(small_config());
    EXPECT_EQ(map_stations_to_cells(sc.stations, sc.grid), sc.station_cells);
    auto cells = sc.station_cells;
    std::sort(cells.begin(), cells.end());
    EXPECT_EQ(std::unique(cells.begin(), cells.end()), cells.end());
}

TEST(Synth, TruthRecordMatchesClosedForm) {
    const auto sc = generate_scenario(small_config());
    for (const auto& p : sc.truth.pairs) {
        const auto a = sc.grid[sc.station_cells[p.i]].pos, b = sc.grid[sc.station_cells[p.j]].pos;
        EXPECT_EQ(p.theta, ec_pair_br(sc.truth.model, a, b));
        EXPECT_DOUBLE_EQ(p.distance_km, haversine_km(a, b));
    }
    std::vector<GeoPoint> pts;
    for (auto c : sc.station_cells) pts.push_back(sc.grid[c].pos);
    EXPECT_DOUBLE_EQ(sc.truth.model.origin.lon, centroid(pts).lon);
}

TEST(Synth, NoBlendGivesIdenticalMembers) {
    auto c = small_config();
    c.rho = 0.0;
    const auto sc = generate_scenario(c);
    for (std::size_t d = 0; d < c.n_days; ++d)
        for (std::size_t m = 1; m < c.n_members; ++m)
            for (std::size_t k = 0; k < sc.grid.size(); ++k)
                ASSERT_EQ(sc.forecasts.at(d, m, k), sc.forecasts.at(d, 0, k));
    // The amount curve is strictly increasing, so ranks equal the latent ranks.
    double prev = -1.0;
    for (int i = 1; i < 1000; ++i) {
        const double v = detail::rank_to_amount(i / 1000.0);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Synth, DryDaysOnlyWithPositiveP0) {
    auto c = small_config();
    const auto wet = generate_scenario(c);
    for (double v : wet.forecasts.values()) EXPECT_GT(v, 0.0);
    c.p0 = 0.5;
    const auto dry = generate_scenario(c);
    std::size_t zeros = 0;
    for (double v : dry.forecasts.values()) zeros += v == 0.0;
    const double frac = static_cast<double>(zeros) / static_cast<double>(dry.forecasts.values().size());
    EXPECT_NEAR(frac, 0.4 * 0.5, 0.05);
}

TEST(Synth, Deterministic) {
    const auto c = small_config();
    set_thread_count(1);
    const auto a = generate_scenario(c);
    set_thread_count(4);
    const auto b = generate_scenario(c);
    set_thread_count(0);
    EXPECT_EQ(a.station_daily, b.station_daily);
    EXPECT_EQ(a.maxima.values(), b.maxima.values());
    EXPECT_TRUE(std::equal(a.forecasts.values().begin(), a.forecasts.values().end(), b.forecasts.values().begin()));
    auto c2 = c;
    c2.seed = 43;
    EXPECT_NE(generate_scenario(c2).maxima.values(), a.maxima.values());
}

TEST(Synth, MaximaFollowConfiguredGev) {
    auto c = small_config();
    c.nx = c.ny = 3;
    c.n_members = 1;
    c.n_days = 18 * 400;
    const auto sc = generate_scenario(c);
    for (std::size_t s = 0; s < c.n_stations; ++s) {
        // 1% critical value of the Kolmogorov law at n = 400.
        EXPECT_LT(ks_test(sc.maxima.values().column(s), c.gev_for(s)).statistic, 1.63 / 20.0) << s;
    }
}

TEST(Synth, EmpiricalThetaMatchesTruth) {
    auto c = small_config();
    c.nx = c.ny = 4;
    c.n_members = 1;
    c.block_length = 1;
    c.n_days = 2000;
    c.truth = {0.2, 0.01, 0.02, 0.3, 1.0, {}};
    const auto sc = generate_scenario(c);
    const auto ec = ec_cloud(sc.maxima, sc.stations, 2);
    ASSERT_EQ(ec.size(), sc.truth.pairs.size());
    for (std::size_t p = 0; p < ec.size(); ++p) EXPECT_NEAR(ec[p].theta, sc.truth.pairs[p].theta, 0.08);
}

TEST(Synth, PerStationGev) {
    auto c = small_config();
    c.gev = {{10, 2, 0.1}, {11, 2, 0.1}, {12, 2, 0.1}, {13, 2, 0.1}, {14, 2, 0.1}};
    const auto sc = generate_scenario(c);
    EXPECT_EQ(sc.truth.gev[3].mu, 13.0);
    c.gev.pop_back();
    EXPECT_THROW(generate_scenario(c), DomainError);
}

TEST(Synth, ConfigValidation) {
    auto c = small_config();
    c.rho = 1.5;
    EXPECT_THROW(c.validate(), DomainError);
    c = small_config();
    c.n_stations = 31;
    EXPECT_THROW(c.validate(), DomainError);
    c = small_config();
    c.truth.beta = 2.5;
    EXPECT_THROW(c.validate(), DomainError);
}
