#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "helpers.hpp"

using namespace maxstable;
using testing_util::scratch;
using testing_util::write_text;

TEST(Grid, ReadsRowsInFileOrder) {
    const auto dir = scratch("grid_ok");
    write_text(dir / "grid.csv", "cell_id,lon,lat\n0,1.0,2.0\n2,1.2,2.0\n1,1.1,2.0\n");
    const auto g = read_grid(dir / "grid.csv");
    ASSERT_EQ(g.size(), 3u);
    EXPECT_EQ(g[1].id, 2);
    EXPECT_EQ(g.position(1), 2u);
    EXPECT_DOUBLE_EQ(g[2].pos.lon, 1.1);
}

TEST(Grid, DuplicateIdIsValidationError) {
    const auto dir = scratch("grid_dup");
    write_text(dir / "grid.csv", "cell_id,lon,lat\n0,1,2\n1,1,2\n1,1,3\n");
    EXPECT_THROW(read_grid(dir / "grid.csv"), ValidationError);
}

TEST(Grid, HeaderOnlyIsValidationError) {
    const auto dir = scratch("grid_empty");
    write_text(dir / "grid.csv", "cell_id,lon,lat\n");
    try {
        read_grid(dir / "grid.csv");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("at least 1 cell"), std::string::npos);
    }
}

TEST(Grid, MalformedRowNamesLine) {
    const auto dir = scratch("grid_bad");
    write_text(dir / "grid.csv", "cell_id,lon,lat\n0,1,2\n1,abc,2\n");
    try {
        read_grid(dir / "grid.csv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(Forecasts, EmptyValueIsMissing) {
    const auto dir = scratch("fc_missing");
    write_text(dir / "grid.csv", "cell_id,lon,lat\n0,0,0\n1,0.1,0\n");
    write_text(dir / "fc.csv", "day,member,cell_id,value\n0,0,0,1.5\n0,0,1,\n1,0,0,0\n1,0,1,2\n");
    const auto g = read_grid(dir / "grid.csv");
    const auto a = read_forecasts(dir / "fc.csv", g);
    EXPECT_EQ(a.days(), 2u);
    EXPECT_EQ(a.members(), 1u);
    EXPECT_EQ(a.missing_count(), 1u);
    EXPECT_TRUE(ForecastArchive::is_missing(a.at(0, 0, 1)));
    EXPECT_EQ(a.at(1, 0, 0), 0.0);
}

TEST(Forecasts, UnknownCellIsValidationError) {
    const auto dir = scratch("fc_cell");
    write_text(dir / "grid.csv", "cell_id,lon,lat\n0,0,0\n");
    write_text(dir / "fc.csv", "day,member,cell_id,value\n0,0,5,1\n");
    EXPECT_THROW(read_forecasts(dir / "fc.csv", read_grid(dir / "grid.csv")), ValidationError);
}

TEST(Maxima, ZeroValueIsValidationError) {
    const auto dir = scratch("mx_zero");
    write_text(dir / "st.csv", "station_id,lon,lat\n7,0,0\n");
    write_text(dir / "mx.csv", "block,station_id,value\n0,7,1.0\n1,7,0.0\n");
    EXPECT_THROW(read_maxima(dir / "mx.csv", read_stations(dir / "st.csv")), ValidationError);
}

TEST(Maxima, ShapeFromStationFile) {
    // 39 stations x 190 blocks, the archive shape used for the study region.
    const auto dir = scratch("mx_shape");
    std::string st = "station_id,lon,lat\n", mx = "block,station_id,value\n";
    for (int s = 0; s < 39; ++s) st += std::to_string(100 + s) + ",3.0," + std::to_string(43.0 + 0.01 * s) + "\n";
    for (int b = 0; b < 190; ++b)
        for (int s = 0; s < 39; ++s) mx += std::to_string(b) + "," + std::to_string(100 + s) + "," + std::to_string(1 + b + s) + "\n";
    write_text(dir / "st.csv", st);
    write_text(dir / "mx.csv", mx);
    const auto m = read_maxima(dir / "mx.csv", read_stations(dir / "st.csv"));
    EXPECT_EQ(m.blocks(), 190u);
    EXPECT_EQ(m.stations(), 39u);
    EXPECT_EQ(m.values()(3, 2), 1 + 3 + 2);
}

TEST(Maxima, MissingPairIsValidationError) {
    const auto dir = scratch("mx_missing");
    write_text(dir / "st.csv", "station_id,lon,lat\n1,0,0\n2,0,1\n");
    write_text(dir / "mx.csv", "block,station_id,value\n0,1,1.0\n0,2,1.0\n1,1,2.0\n");
    EXPECT_THROW(read_maxima(dir / "mx.csv", read_stations(dir / "st.csv")), ValidationError);
}

TEST(Geo, OneDegreeAtEquator) {
    // 2 pi R / 360 with R = 6371 km.
    EXPECT_NEAR(haversine_km({0, 0}, {1, 0}), 2.0 * std::numbers::pi * 6371.0 / 360.0, 1e-9);
    EXPECT_NEAR(haversine_km({0, 0}, {1, 0}), 111.19, 0.01);
    EXPECT_EQ(haversine_km({3.3, 44.1}, {3.3, 44.1}), 0.0);
}

TEST(Geo, DistanceMatrixProperties) {
    Rng rng(5);
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 25; ++i) pts.push_back({2.0 + 6.0 * rng.uniform(), 42.0 + 3.0 * rng.uniform()});
    const auto d = pairwise_distances(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(d(i, i), 0.0);
        for (std::size_t j = 0; j < pts.size(); ++j) {
            EXPECT_EQ(d(i, j), d(j, i));
            for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_LE(d(i, k), d(i, j) + d(j, k) + 1e-9);
        }
    }
}

TEST(Geo, StationAtCellCentre) {
    const auto g = testing_util::square_grid(5, 5);
    StationSet st(std::vector<Station>{{1, g[7].pos}});
    EXPECT_EQ(map_stations_to_cells(st, g).at(0), 7u);
}

TEST(Geo, EquidistantStationTakesSmallestId) {
    // Cells 4 and 7 symmetric about the station's meridian.
    std::vector<Cell> cells{{0, {0.0, 10.0}}, {1, {1.0, 10.0}}, {2, {2.0, 10.0}}, {3, {3.0, 10.0}},
                            {7, {0.4, 0.0}},  {4, {-0.4, 0.0}}, {5, {5.0, 10.0}}, {6, {6.0, 10.0}}};
    const GridSpec g(cells);
    StationSet st(std::vector<Station>{{1, {0.0, 0.0}}});
    const auto pos = map_stations_to_cells(st, g).at(0);
    EXPECT_EQ(g[pos].id, 4);
}

TEST(Geo, NearestCellMatchesBruteForce) {
    const auto g = testing_util::square_grid(30, 30, 0.1, 2.0, 42.0);
    StationSet st(std::vector<Station>{{1, {3.95, 43.61}}, {2, {2.03, 42.07}}});
    const auto cells = map_stations_to_cells(st, g);
    for (std::size_t s = 0; s < st.size(); ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < g.size(); ++c)
            if (haversine_km(st[s].pos, g[c].pos) < haversine_km(st[s].pos, g[best].pos)) best = c;
        EXPECT_EQ(cells[s], best);
    }
}

TEST(Geo, MappingIsIdempotent) {
    const auto g = testing_util::square_grid(8, 8);
    Rng rng(9);
    std::vector<Station> s;
    for (int i = 0; i < 20; ++i) s.push_back({i, {2.0 + 0.7 * rng.uniform(), 43.0 + 0.7 * rng.uniform()}});
    const StationSet st(s);
    const auto first = map_stations_to_cells(st, g);
    std::vector<Station> moved;
    for (std::size_t i = 0; i < st.size(); ++i) moved.push_back({st[i].id, g[first[i]].pos});
    EXPECT_EQ(map_stations_to_cells(StationSet(moved), g), first);
}

TEST(RoundTrip, ContainersAreBitExact) {
    const auto dir = scratch("roundtrip");
    Rng rng(3);
    const auto g = testing_util::square_grid(4, 3, 0.123456789);
    std::vector<Station> s;
    for (int i = 0; i < 4; ++i) s.push_back({10 + i, {rng.uniform() * 7, 40 + rng.uniform()}});
    const StationSet st(s);
    ForecastArchive a(3, 2, g.size());
    for (std::size_t d = 0; d < 3; ++d)
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t c = 0; c < g.size(); ++c)
                a.at(d, m, c) = (d + m + c) % 5 == 0 ? std::numeric_limits<double>::quiet_NaN() : rng.exponential();
    Matrix mx(21, st.size());
    for (auto& v : mx.data()) v = 1.0 + rng.exponential();
    const MaximaMatrix maxima(mx, 18);

    write_grid(dir / "g.csv", g);
    write_stations(dir / "s.csv", st);
    write_forecasts(dir / "f.csv", a, g);
    write_maxima(dir / "m.csv", maxima, st);

    const auto g2 = read_grid(dir / "g.csv");
    for (std::size_t c = 0; c < g.size(); ++c) {
        EXPECT_EQ(g2[c].pos.lon, g[c].pos.lon);
        EXPECT_EQ(g2[c].pos.lat, g[c].pos.lat);
    }
    const auto st2 = read_stations(dir / "s.csv");
    for (std::size_t i = 0; i < st.size(); ++i) EXPECT_EQ(st2[i].pos.lat, st[i].pos.lat);
    const auto a2 = read_forecasts(dir / "f.csv", g2);
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const double x = a.values()[i], y = a2.values()[i];
        EXPECT_TRUE((std::isnan(x) && std::isnan(y)) || x == y);
    }
    EXPECT_EQ(read_maxima(dir / "m.csv", st2).values(), mx);
}
