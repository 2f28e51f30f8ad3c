#include <gtest/gtest.h>

#include <fstream>

#include "helpers.hpp"

using namespace maxstable;
namespace io = maxstable::io;
using testing_util::scratch;

TEST(Panel, RoundTripIsBitExact) {
    const auto dir = scratch("panel");
    Rng rng(1);
    FrechetPanel p{Matrix(17, 9)};
    for (auto& v : p.maps.data()) v = rng.uniform() < 0.2 ? 0.0 : rng.unit_frechet();
    io::write_panel(dir / "p.bin", p);
    EXPECT_EQ(std::filesystem::file_size(dir / "p.bin"), 24u + 17u * 9u * 8u);
    EXPECT_EQ(io::read_panel(dir / "p.bin").maps, p.maps);
}

TEST(Panel, RejectsTruncatedAndForeignFiles) {
    const auto dir = scratch("panel_bad");
    io::write_panel(dir / "p.bin", FrechetPanel{Matrix(3, 3, 1.0)});
    std::filesystem::resize_file(dir / "p.bin", 24 + 8 * 8);
    EXPECT_THROW(io::read_panel(dir / "p.bin"), ParseError);
    testing_util::write_text(dir / "q.bin", "cell_id,lon,lat\n0,1,2\n0000000000");
    EXPECT_THROW(io::read_panel(dir / "q.bin"), ParseError);
}

TEST(Basis, RoundTripWithGridIds) {
    const auto dir = scratch("basis");
    std::vector<Cell> cells{{2, {0, 0}}, {0, {1, 0}}, {1, {2, 0}}};
    const GridSpec g(cells);
    Rng rng(2);
    FrechetPanel p{Matrix(40, 3)};
    for (auto& v : p.maps.data()) v = rng.unit_frechet();
    const auto b = build_basis_B(p, 0.8);
    io::write_basis(dir, b, &g);
    const auto back = io::read_basis(dir, g);
    EXPECT_EQ(back.functions, b.functions);
    EXPECT_EQ(back.source, BasisSource::Exceedances);
    EXPECT_EQ(*back.threshold, *b.threshold);
    const auto meta = io::read_json(dir / "basis-meta.json");
    EXPECT_EQ(meta["n_functions"], b.size());
}

TEST(Basis, PositionIdsAndSizeMismatch) {
    const auto dir = scratch("basis_pos");
    const auto b = testing_util::random_basis(5, 4, 3);
    io::write_basis(dir, b);
    const auto g = testing_util::square_grid(2, 2);
    EXPECT_EQ(io::read_basis(dir, g).functions, b.functions);
    EXPECT_THROW(io::read_basis(dir, testing_util::square_grid(3, 2)), ValidationError);
}

TEST(Models, DescriptorsRoundTrip) {
    const auto dir = scratch("models");
    const auto g = testing_util::square_grid(3, 2);
    const auto b = testing_util::random_basis(6, g.size(), 4);
    io::write_basis(dir / "basis", b, &g);
    const std::vector<MaxStableModel> models{MaxLinearModel{b}, ReichShabyModel{b, 0.35},
                                             MaxMixtureModel{MaxLinearModel{b}, 0.25},
                                             BrownResnickModel{0.1, 0.02, 0.05, 0.3, 1.0, {2.5, 43.5}}};
    for (const auto& m : models) {
        io::write_json(dir / "model.json", io::model_descriptor(m, "basis"));
        const auto back = io::read_model(dir / "model.json", g);
        ASSERT_EQ(back.index(), m.index());
        const std::size_t pair[] = {1, 4};
        const auto pts = g.points();
        EXPECT_EQ(ec_closed_form(back, pair, pts), ec_closed_form(m, pair, pts)) << model_type_name(m);
    }
}

TEST(Models, FitJsonReadsAsModel) {
    const auto dir = scratch("fitjson");
    const auto g = testing_util::square_grid(2, 2);
    const auto b = testing_util::random_basis(6, g.size(), 5);
    io::write_basis(dir / "basis", b, &g);
    FitResult r{ReichShabyModel{b, 0.6}, 0.05, 120, {0.1, -0.1}, {"note"}, std::nullopt};
    const auto j = io::fit_json(r, "basis");
    EXPECT_EQ(j["model_type"], "reichshaby");
    EXPECT_EQ(j["n_pairs"], 2);
    EXPECT_TRUE(j["start_index"].is_null());
    io::write_json(dir / "fit.json", j);
    EXPECT_EQ(std::get<ReichShabyModel>(io::read_model(dir / "fit.json", g)).alpha, 0.6);
}

TEST(Models, UnknownTypeRejected) {
    const auto dir = scratch("model_bad");
    testing_util::write_text(dir / "m.json", R"({"type": "gaussian", "parameters": {}, "basis_path": "."})");
    EXPECT_THROW(io::read_model(dir / "m.json", testing_util::square_grid(1, 1)), Error);
}

TEST(Coefficients, PairsAndTriplesRoundTrip) {
    const auto dir = scratch("ec");
    Rng rng(6);
    Matrix m(30, 5);
    for (auto& v : m.data()) v = rng.unit_frechet();
    const MaximaMatrix mx(m, 18);
    std::vector<Station> s;
    for (int i = 0; i < 5; ++i) s.push_back({100 + 7 * i, {2.0 + 0.1 * i, 43.0 + 0.05 * i}});
    const StationSet st(s);
    for (std::size_t order : {2u, 3u}) {
        const auto ec = ec_cloud(mx, st, order);
        io::write_ec(dir / "ec.csv", ec, st);
        const auto back = io::read_ec(dir / "ec.csv", st);
        ASSERT_EQ(back.size(), ec.size());
        for (std::size_t k = 0; k < ec.size(); ++k) {
            EXPECT_EQ(back[k].members, ec[k].members);
            EXPECT_EQ(back[k].theta, ec[k].theta);
            EXPECT_EQ(back[k].madogram, ec[k].madogram);
            EXPECT_EQ(back[k].distance_km.has_value(), order == 2);
        }
    }
    std::ifstream in(dir / "ec.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "i,j,k,madogram,theta");
}

TEST(Scenario, ConfigJsonRoundTripAndStrictKeys) {
    ScenarioConfig c;
    c.nx = 7;
    c.truth.b2 = 0.07;
    c.gev = {{1, 2, 0.1}};
    c.seed = 99;
    const auto back = io::scenario_from_json(io::scenario_to_json(c), "cfg");
    EXPECT_EQ(io::scenario_to_json(back).dump(), io::scenario_to_json(c).dump());
    auto j = io::scenario_to_json(c);
    j["n_sations"] = 4;
    EXPECT_THROW(io::scenario_from_json(j, "cfg"), ValidationError);
    const auto partial = io::scenario_from_json(io::json{{"nx", 5}, {"ny", 5}, {"n_stations", 4}}, "cfg");
    EXPECT_EQ(partial.n_days, ScenarioConfig{}.n_days);
}

TEST(Digest, StableAndSensitive) {
    const auto dir = scratch("digest");
    testing_util::write_text(dir / "a", "hello");
    testing_util::write_text(dir / "b", "hellp");
    EXPECT_EQ(io::file_digest(dir / "a"), "a430d84680aabd0b");  // FNV-1a 64 of "hello"
    EXPECT_NE(io::file_digest(dir / "a"), io::file_digest(dir / "b"));
}
