#include "epinet/spectral.hpp"

#include "oracles.hpp"
#include "semigroup.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace epinet;

namespace {

MetzlerMatrix metzler(std::vector<std::vector<double>> rows)
{
    DenseMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
            m(i, j) = rows[i][j];
        }
    }
    return MetzlerMatrix(std::move(m));
}

} // namespace

TEST(BuildLinearized, Examples)
{
    DenseMatrix a(2);
    a(0, 0) = 0.3;
    a(0, 1) = 0.003;
    a(1, 0) = 0.003;
    a(1, 1) = 0.3;
    const Network net(a);
    const auto m = build_linearized(EpidemicParams::uniform(2, 0.3, 0.5, 2.0), net);
    EXPECT_NEAR(m(0, 0), -0.41, 1e-15);
    EXPECT_NEAR(m(0, 1), 0.0009, 1e-18);
    EXPECT_NEAR(m(1, 0), 0.0009, 1e-18);
    EXPECT_NEAR(m(1, 1), -0.41, 1e-15);

    const auto same = build_linearized(EpidemicParams::uniform(2, 1.0, 0.0, 2.0), net);
    EXPECT_EQ(same.matrix(), a);

    DenseMatrix one(1);
    one(0, 0) = 0.5;
    const auto scalar = build_linearized(EpidemicParams({1.0}, {2.0}, {2.0}), Network(one));
    EXPECT_EQ(scalar(0, 0), -1.5);
}

TEST(MetzlerMatrix, RejectsNegativeOffDiagonal)
{
    EXPECT_THROW(metzler({{0, -0.1}, {1, 0}}), Error);
    EXPECT_NO_THROW(metzler({{-5, 0.1}, {1, -3}}));
}

TEST(SpectralAbscissa, PermutationPair)
{
    const auto r = spectral_abscissa(metzler({{0, 1}, {1, 0}}));
    EXPECT_NEAR(r.abscissa, 1.0, 1e-12);
    EXPECT_NEAR(r.perron[0], 1.0, 1e-12);
    EXPECT_NEAR(r.perron[1], 1.0, 1e-12);
}

TEST(SpectralAbscissa, FrozenTwoByTwo)
{
    // diag + offdiag = -0.41 + 0.0009
    const auto r = spectral_abscissa(metzler({{-0.41, 0.0009}, {0.0009, -0.41}}));
    EXPECT_NEAR(r.abscissa, -0.4091, 1e-12);
    EXPECT_NEAR(r.abscissa, oracle::abscissa_2x2(-0.41, 0.0009, 0.0009, -0.41), 1e-12);
}

TEST(SpectralAbscissa, CrossNetworkEndemicSign)
{
    DenseMatrix a(2);
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    const auto m = build_linearized(EpidemicParams::uniform(2, 1.0, 0.5, 2.0), Network(a));
    EXPECT_NEAR(spectral_abscissa(m).abscissa, 0.5, 1e-10);
}

TEST(SpectralAbscissa, Errors)
{
    try {
        spectral_abscissa(metzler({{0, 1}, {0, 0}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotIrreducible);
    }
    try {
        spectral_abscissa(metzler({{0, 1, 0}, {0.5, 0, 2}, {0, 3, 0}}), {1e-10, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
    }
    EXPECT_THROW(spectral_abscissa(metzler({{0, 1}, {1, 0}}), {0.0, 10}), Error);
}

TEST(SpectralAbscissa, SingleNode)
{
    EXPECT_NEAR(spectral_abscissa(metzler({{-1.5}})).abscissa, -1.5, 1e-14);
}

TEST(SpectralAbscissa, MatchesAnalyticSmallMatrices)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> off(0.0, 2.0), diag(-3.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        // 2x2
        const double a = diag(rng), b = 0.05 + off(rng), c = 0.05 + off(rng), d = diag(rng);
        EXPECT_NEAR(spectral_abscissa(metzler({{a, b}, {c, d}})).abscissa, oracle::abscissa_2x2(a, b, c, d), 1e-10);
        // 3x3 with a ring for irreducibility
        std::array<std::array<double, 3>, 3> m3{};
        std::vector<std::vector<double>> rows(3, std::vector<double>(3));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double v = i == j ? diag(rng) : (j == (i + 1) % 3 ? 0.1 + off(rng) : (trial % 2 ? off(rng) : 0.0));
                m3[i][j] = v;
                rows[i][j] = v;
            }
        }
        EXPECT_NEAR(spectral_abscissa(metzler(rows)).abscissa, oracle::abscissa_3x3(m3), 1e-10) << "trial " << trial;
    }
}

TEST(SpectralAbscissa, ShiftInvariance)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = oracle::random_metzler(30, rng, 0.2, 0.5);
        const double s = spectral_abscissa(m).abscissa;
        for (double alpha : {-1.0, 0.5, 3.0}) {
            EXPECT_NEAR(spectral_abscissa(m.shifted(alpha)).abscissa, s + alpha, 1e-10);
        }
    }
}

TEST(SpectralAbscissa, PerronVectorAndResidual)
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = oracle::random_metzler(40, rng, 0.15, 0.3);
        const auto r = spectral_abscissa(m);
        EXPECT_LE(r.residual, 1e-10);
        double vmax = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            EXPECT_GT(r.perron[i], 0.0);
            vmax = std::max(vmax, r.perron[i]);
            double mv = 0.0;
            for (std::size_t j = 0; j < m.size(); ++j) {
                mv += m(i, j) * r.perron[j];
            }
            EXPECT_NEAR(mv, r.abscissa * r.perron[i], 2e-10);
        }
        EXPECT_DOUBLE_EQ(vmax, 1.0);
    }
}

TEST(SpectralAbscissa, UniformParameterIdentity)
{
    const auto net = random_geometric(60, 100.0, 30.0, 0.3, 0.02, 3);
    const double sA = spectral_abscissa(MetzlerMatrix(net.weights())).abscissa;
    for (auto [beta, gamma] : {std::pair{0.3, 0.5}, std::pair{0.8, 0.3}, std::pair{1.7, 0.05}}) {
        const auto m = build_linearized(EpidemicParams::uniform(60, beta, gamma, 2.0), net);
        EXPECT_NEAR(spectral_abscissa(m).abscissa, beta * sA - gamma, 1e-9);
    }
}

TEST(SpectralAbscissa, SemigroupGrowthAgrees)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> pos(0.5, 1.5);
    for (int trial = 0; trial < 3; ++trial) {
        const auto m = oracle::random_metzler(50, rng);
        std::vector<double> v0(50);
        for (auto& v : v0) v = pos(rng);
        EXPECT_NEAR(oracle::semigroup_growth(m, v0, 200.0, 0.01, 10.0, 100.0), spectral_abscissa(m).abscissa, 1e-3);
    }
}
