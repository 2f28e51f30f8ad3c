#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace maxstable;
using testing_util::ks_unit_frechet;

namespace {
const std::size_t kPair[] = {0, 1};

double laplace(const std::vector<double>& b, double t) {
    double acc = 0.0;
    for (double v : b) acc += std::exp(-t * v);
    return acc / static_cast<double>(b.size());
}

double madogram_theta(const Matrix& fields, std::size_t a, std::size_t b) {
    Matrix two(fields.rows(), 2);
    for (std::size_t t = 0; t < fields.rows(); ++t) {
        two(t, 0) = fields(t, a);
        two(t, 1) = fields(t, b);
    }
    return ec_from_madogram(empirical_fmadogram(MaximaMatrix(two, 1), kPair), 2);
}
}  // namespace

TEST(PositiveStable, LaplaceTransform) {
    const auto b = sample_positive_stable(0.5, 200000, 1);
    EXPECT_NEAR(laplace(b, 1.0), std::exp(-1.0), 0.005);
    EXPECT_DOUBLE_EQ(laplace(b, 0.0), 1.0);
    for (double v : b) ASSERT_GT(v, 0.0);
}

TEST(PositiveStable, HalfIsLevy) {
    // Laplace transform exp(-sqrt t) is the Levy law with cdf erfc(1 / (2 sqrt x)).
    const auto b = sample_positive_stable(0.5, 50000, 2);
    const double d = ks_distance(b, [](double x) { return x <= 0.0 ? 0.0 : std::erfc(0.5 / std::sqrt(x)); });
    EXPECT_LT(d, 0.01);
}

TEST(PositiveStable, RejectsAlpha) {
    EXPECT_THROW(sample_positive_stable(1.0, 5, 1), DomainError);
    EXPECT_THROW(sample_positive_stable(0.0, 5, 1), DomainError);
}

TEST(MaxLinear, SingleConstantFunctionGivesConstantField) {
    SpectralBasis b{Matrix(1, 5, 1.0), BasisSource::AllMaps, std::nullopt};
    const auto f = simulate_maxlinear(MaxLinearModel{b}, 100, 3);
    for (std::size_t r = 0; r < 100; ++r)
        for (std::size_t c = 1; c < 5; ++c) EXPECT_EQ(f(r, c), f(r, 0));
}

TEST(Margins, EverySimulatorIsUnitFrechet) {
    const auto basis = testing_util::random_basis(30, 4, 5);
    const std::size_t n = 20000;
    const std::size_t cell[] = {2};
    EXPECT_LT(ks_unit_frechet(simulate_maxlinear(MaxLinearModel{basis}, n, 1, cell).column(0)), 0.012);
    EXPECT_LT(ks_unit_frechet(simulate_reichshaby(ReichShabyModel{basis, 0.4}, n, 2, cell).column(0)), 0.012);
    EXPECT_LT(ks_unit_frechet(simulate_mixture(MaxMixtureModel{MaxLinearModel{basis}, 0.3}, n, 3, cell).column(0)),
              0.012);
    const auto g = testing_util::square_grid(1, 1);
    EXPECT_LT(ks_unit_frechet(simulate_br(BrownResnickModel{0.2, 0.1, 0.1, 0, 1, {2, 43}}, g, n, 4).column(0)),
              0.012);
}

TEST(Margins, BrownResnickInteriorCell) {
    const auto g = testing_util::square_grid(4, 4);
    const BrownResnickModel m{0.1, 0.02, 0.05, 0.3, 1.0, {2.15, 43.15}};
    const auto f = simulate_br(m, g, 5000, 8);
    EXPECT_LT(ks_unit_frechet(f.column(9)), 0.025);
}

TEST(MaxLinear, MonteCarloThetaMatchesClosedForm) {
    const auto basis = testing_util::random_basis(25, 3, 11);
    const MaxLinearModel m{basis};
    const auto f = simulate_maxlinear(m, 200000, 12);
    EXPECT_NEAR(ec_from_threshold(f, kPair, 0.5), ec_pair_maxlinear(m, 0, 1), 0.01);
}

TEST(ReichShaby, MonteCarloThetaMatchesClosedForm) {
    const auto basis = testing_util::random_basis(25, 3, 13);
    const ReichShabyModel m{basis, 0.3};
    const auto f = simulate_reichshaby(m, 200000, 14);
    EXPECT_NEAR(ec_from_threshold(f, kPair, 0.5), ec_pair_reichshaby(m, 0, 1), 0.015);
}

TEST(Mixture, PureNoiseIsIndependent) {
    const auto basis = testing_util::random_basis(10, 3, 15);
    const auto f = simulate_mixture(MaxMixtureModel{MaxLinearModel{basis}, 1.0}, 20000, 16);
    EXPECT_NEAR(ec_from_threshold(f, kPair, 0.5), 2.0, 0.05);
}

TEST(Mixture, SimulatedIdentity) {
    const auto basis = testing_util::random_basis(20, 3, 17);
    const MaxMixtureModel m{MaxLinearModel{basis}, 0.35};
    const auto f = simulate_mixture(m, 200000, 18);
    EXPECT_NEAR(ec_from_threshold(f, kPair, 0.5), 0.7 + 0.65 * ec_pair_maxlinear(m.inner, 0, 1), 0.015);
}

TEST(BrownResnick, ThetaAtVariogramTwo) {
    const BrownResnickModel m{0.0, 1.0, 1.0, 0.0, 1.0, {}};
    const std::vector<PlanarPoint> pts{{0, 0}, {2, 0}};
    const auto f = simulate_extremal(make_br_sampler(m, pts), 2000, 21);
    EXPECT_NEAR(madogram_theta(f, 0, 1), 1.6827, 0.04);
}

TEST(BrownResnick, NuggetRaisesThetaAtShortRange) {
    const BrownResnickModel m{0.3583 * 0.3583, 1e-4, 1e-4, 0.0, 1.0, {}};
    const std::vector<PlanarPoint> pts{{0, 0}, {0.5, 0}};
    const auto f = simulate_extremal(make_br_sampler(m, pts), 20000, 22);
    EXPECT_NEAR(ec_from_threshold(f, kPair, 0.5), 1.2, 0.02);
}

TEST(BrownResnick, IsotropicPairsAgree) {
    const BrownResnickModel m{0.0, 0.5, 0.5, 0.2, 1.0, {}};
    const std::vector<PlanarPoint> pts{{0, 0}, {3, 0}, {0, 3}};
    const auto f = simulate_extremal(make_br_sampler(m, pts), 4000, 23);
    EXPECT_NEAR(madogram_theta(f, 0, 1), madogram_theta(f, 0, 2), 0.04);
}

TEST(BrownResnick, AnisotropyOrdersPairs) {
    const BrownResnickModel m{0.0, 0.2, 1.0, 0.0, 1.0, {}};
    const std::vector<PlanarPoint> pts{{0, 0}, {3, 0}, {0, 3}};
    const auto f = simulate_extremal(make_br_sampler(m, pts), 3000, 24);
    EXPECT_NEAR(madogram_theta(f, 0, 1), ec_br_from_variogram(0.6), 0.04);
    EXPECT_NEAR(madogram_theta(f, 0, 2), ec_br_from_variogram(3.0), 0.04);
}

TEST(BrownResnick, GridCap) {
    const auto g = testing_util::square_grid(71, 71, 0.01);
    EXPECT_THROW(simulate_br(BrownResnickModel{}, g, 1, 1), DomainError);
}

TEST(Determinism, SameSeedSameFieldsAnyThreadCount) {
    const auto g = testing_util::square_grid(5, 4);
    const BrownResnickModel m{0.1, 0.02, 0.05, 0.3, 1.0, {2.2, 43.15}};
    set_thread_count(1);
    const auto a = simulate_br(m, g, 50, 99);
    set_thread_count(4);
    const auto b = simulate_br(m, g, 50, 99);
    set_thread_count(0);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, simulate_br(m, g, 50, 100));

    const auto basis = testing_util::random_basis(10, g.size(), 1);
    const ReichShabyModel rs{basis, 0.5};
    set_thread_count(1);
    const auto c = simulate(rs, g, 30, 5);
    set_thread_count(3);
    EXPECT_EQ(c, simulate(rs, g, 30, 5));
    set_thread_count(0);
}

TEST(Simulate, RepeatedCellsShareValues) {
    const auto g = testing_util::square_grid(3, 3);
    const auto basis = testing_util::random_basis(10, g.size(), 2);
    const std::size_t cells[] = {4, 1, 4};
    for (const MaxStableModel& model :
         {MaxStableModel{MaxLinearModel{basis}}, MaxStableModel{ReichShabyModel{basis, 0.5}},
          MaxStableModel{MaxMixtureModel{MaxLinearModel{basis}, 0.4}},
          MaxStableModel{BrownResnickModel{0.1, 0.02, 0.05, 0.3, 1.0, {2.1, 43.1}}}}) {
        const auto f = simulate(model, g, 20, 3, cells);
        ASSERT_EQ(f.cols(), 3u);
        for (std::size_t r = 0; r < 20; ++r) EXPECT_EQ(f(r, 0), f(r, 2)) << model_type_name(model);
    }
    const std::size_t bad[] = {9};
    EXPECT_THROW(simulate(MaxLinearModel{basis}, g, 1, 1, bad), DomainError);
}
