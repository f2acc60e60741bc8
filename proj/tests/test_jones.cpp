#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include "shpol/jones.hpp"

using namespace shpol;

namespace {

constexpr double kTol = 1e-12;

double max_abs_diff(const JonesMatrix& a, const JonesMatrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(a.m[i] - b.m[i]));
    return worst;
}

JonesVector random_vector(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return {cplx{g(rng), g(rng)}, cplx{g(rng), g(rng)}};
}

// Entrywise product written out by hand, independent of operator*.
JonesMatrix naive_product(const JonesMatrix& a, const JonesMatrix& b) {
    JonesMatrix r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            cplx acc{};
            for (int k = 0; k < 2; ++k) acc += a(i, k) * b(k, j);
            r(i, j) = acc;
        }
    return r;
}

}  // namespace

TEST(Rotator, ZeroIsIdentity) { EXPECT_EQ(rotator(0.0), JonesMatrix::identity()); }

TEST(Rotator, QuarterTurn) {
    const JonesMatrix r = rotator(kPi / 2.0);
    EXPECT_LT(max_abs_diff(r, JonesMatrix::from(0.0, -1.0, 1.0, 0.0)), kTol);
}

TEST(Rotator, ComposesAdditively) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int k = 0; k < 200; ++k) {
        const double a = u(rng), b = u(rng);
        EXPECT_LT(max_abs_diff(naive_product(rotator(a), rotator(b)), rotator(a + b)), kTol);
        EXPECT_NEAR(rotator(a).det().real(), 1.0, kTol);
    }
}

TEST(Rotator, RejectsNonFinite) {
    EXPECT_THROW(rotator(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
    EXPECT_THROW(rotator(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(PhasePlate, SpecialValues) {
    EXPECT_EQ(phase_plate(0.0), JonesMatrix::identity());
    const JonesMatrix p = phase_plate(kPi / 2.0);
    EXPECT_LT(max_abs_diff(p, JonesMatrix::from(cplx{0, 1}, 0.0, 0.0, cplx{0, -1})), kTol);
    EXPECT_EQ(p(0, 1), cplx{});
    EXPECT_EQ(p(1, 0), cplx{});
}

TEST(PhasePlate, UnitDeterminant) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int k = 0; k < 100; ++k) {
        EXPECT_NEAR(std::abs(phase_plate(u(rng)).det()), 1.0, kTol);
    }
    EXPECT_THROW(phase_plate(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(Waveplate, QuarterWaveAtZeroAzimuth) {
    const JonesMatrix q = quarter_wave_plate(0.0);
    EXPECT_LT(max_abs_diff(q, JonesMatrix::from(std::polar(1.0, -kPi / 4), 0.0, 0.0, std::polar(1.0, kPi / 4))), kTol);
}

TEST(Waveplate, HalfWaveIsPiPeriodicInAzimuth) {
    for (double a : {0.0, 0.3, 1.7, 4.0}) {
        EXPECT_LT(max_abs_diff(half_wave_plate(a), half_wave_plate(a + kPi)), kTol);
    }
}

TEST(Pbs, AlignedSplit) {
    auto [x, y] = pbs_split({1.0, 0.0}, 0.0);
    EXPECT_DOUBLE_EQ(x.power(), 1.0);
    EXPECT_DOUBLE_EQ(y.power(), 0.0);

    auto [x2, y2] = pbs_split({1.0, 0.0}, kPi / 2.0);
    EXPECT_NEAR(x2.power(), 0.0, kTol);
    EXPECT_NEAR(y2.power(), 1.0, kTol);
}

TEST(Pbs, ArmsMatchScalarForm) {
    const JonesVector v{0.8, cplx{0.0, 0.6}};
    const double t = 0.3;
    const cplx px = v.ex * std::cos(t) - v.ey * std::sin(t);
    const cplx py = v.ex * std::sin(t) + v.ey * std::cos(t);
    auto [x, y] = pbs_split(v, t);
    EXPECT_LT(std::abs(x.ex - px), kTol);
    EXPECT_EQ(x.ey, cplx{});
    EXPECT_EQ(y.ex, cplx{});
    EXPECT_LT(std::abs(y.ey - py), kTol);
    EXPECT_NEAR(x.power() + y.power(), 1.0, kTol);
}

TEST(Pbs, RejectsNonFiniteInput) {
    EXPECT_THROW(pbs_split({std::numeric_limits<double>::quiet_NaN(), 0.0}, 0.0), InvalidArgument);
}

TEST(Pbc, CombinesOrthogonalArms) {
    const JonesVector v = pbc_combine({1.0, 0.0}, {0.0, 1.0}, 0.0);
    EXPECT_EQ(v, (JonesVector{1.0, 1.0}));
}

TEST(Pbc, RoundTripAtZeroIsExact) {
    const JonesVector v{cplx{0.3, -0.2}, cplx{1.1, 0.4}};
    auto [x, y] = pbs_split(v, 0.0);
    EXPECT_EQ(pbc_combine(x, y, 0.0), v);
}

TEST(Pbc, RoundTripProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int k = 0; k < 1000; ++k) {
        const JonesVector v = random_vector(rng);
        const double t = k == 0 ? 0.7 : u(rng);
        auto [x, y] = pbs_split(v, t);
        const JonesVector back = pbc_combine(x, y, t);
        const double scale = std::sqrt(v.power());
        ASSERT_LT(std::abs(back.ex - v.ex), kTol * scale);
        ASSERT_LT(std::abs(back.ey - v.ey), kTol * scale);
    }
}

TEST(CompositeChannel, Degenerations) {
    EXPECT_LT(max_abs_diff(composite_channel(0.4, 0.0), JonesMatrix::identity()), kTol);
    EXPECT_LT(max_abs_diff(composite_channel(0.0, 1.1), phase_plate(1.1)), kTol);
}

TEST(CompositeChannel, UnitaryAndEigenphases) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int k = 0; k < 500; ++k) {
        const double t = u(rng), p = u(rng);
        const JonesMatrix A = composite_channel(t, p);
        ASSERT_LT(max_abs_diff(A * A.adjoint(), JonesMatrix::identity()), kTol);
        // Eigenvalues of a 2x2 from trace and determinant.
        const cplx tr = A(0, 0) + A(1, 1);
        const cplx disc = std::sqrt(tr * tr - 4.0 * A.det());
        const cplx l1 = (tr + disc) / 2.0, l2 = (tr - disc) / 2.0;
        const cplx e1 = std::polar(1.0, p), e2 = std::polar(1.0, -p);
        const double match = std::min(std::abs(l1 - e1) + std::abs(l2 - e2), std::abs(l1 - e2) + std::abs(l2 - e1));
        ASSERT_LT(match, 1e-7);
    }
}

TEST(PowerOf, Values) {
    PolPower p = power_of({1.0, 0.0});
    EXPECT_EQ(p.px, 1.0);
    EXPECT_EQ(p.py, 0.0);
    p = power_of({0.0, 0.0});
    EXPECT_EQ(p.total(), 0.0);
    p = power_of({3.0, cplx{0.0, 4.0}});
    EXPECT_DOUBLE_EQ(p.px, 9.0);
    EXPECT_DOUBLE_EQ(p.py, 16.0);
}

TEST(Invariants, UnitarityAndPowerConservation) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0 * kPi, 2.0 * kPi);
    for (int k = 0; k < 2000; ++k) {
        const JonesMatrix elems[] = {rotator(u(rng)), phase_plate(u(rng)), composite_channel(u(rng), u(rng)),
                                     quarter_wave_plate(u(rng)), half_wave_plate(u(rng)), waveplate(u(rng), u(rng))};
        for (const auto& M : elems) {
            ASSERT_LT(unitarity_error(M), kTol);
            const JonesVector v = random_vector(rng);
            ASSERT_NEAR((M * v).power(), v.power(), kTol * v.power());
        }
    }
}
