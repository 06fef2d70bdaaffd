#include "oracles.hpp"
#include "qring/ring_model.hpp"
#include "qring/specfun.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace qring;

TEST(Geometry, RejectsRatiosOutsideUnitInterval) {
    for (double rho : {0.0, -0.1, 1.0, 1.2, std::numeric_limits<double>::quiet_NaN()})
        EXPECT_THROW(RingGeometry{rho}, qring::parameter_error) << rho;
    const RingGeometry g(0.6);
    EXPECT_DOUBLE_EQ(g.width(), 0.4);
    EXPECT_TRUE(g.contains(0.6));
    EXPECT_TRUE(g.contains(1.0));
    EXPECT_FALSE(g.contains(0.59));
}

TEST(Quadrature, BesselSquareMatchesTrapezoidOracle) {
    const RingGeometry g(0.6);
    auto f = [](double r) {
        const double j = std::cyl_bessel_j(4.0, 12.0 * r);
        return j * j * r;
    };
    const double want = oracle::trapezoid(f, 0.6, 1.0, 1000000);
    const auto q = make_quadrature(64, g);
    EXPECT_NEAR(q.integrate(f), want, 1e-10);
}

TEST(Quadrature, ExactForPolynomials) {
    const RingGeometry g(0.3);
    const auto q = make_quadrature(8, g);
    for (int p = 0; p <= 15; ++p) {
        const double want = (1.0 - std::pow(0.3, p + 1)) / (p + 1);
        EXPECT_NEAR(q.integrate([p](double r) { return std::pow(r, p); }), want, 1e-14) << p;
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_GT(q.nodes[i], 0.3);
        EXPECT_LT(q.nodes[i], 1.0);
        EXPECT_GT(q.weights[i], 0.0);
    }
}

TEST(Quadrature, RejectsTinyOrder) { EXPECT_THROW(make_quadrature(1, RingGeometry(0.5)), qring::parameter_error); }

TEST(Quadrature, SelfValidationDoublesUntilStable) {
    const RingGeometry g(0.6);
    auto norm = [](const RadialQuadrature& q) {
        return q.integrate([](double r) {
            const double j = std::cyl_bessel_j(3.0, 150.0 * r);
            return j * j * r;
        });
    };
    const auto q = self_validating_quadrature(g, norm, 16);
    EXPECT_GT(q.order, 16);
    const auto ref = make_quadrature(512, g);
    EXPECT_NEAR(norm(q), norm(ref), 1e-9);
}

TEST(PolarGrid, PowerOfTwoAboveAliasingBound) {
    const auto q = make_quadrature(16, RingGeometry(0.6));
    for (int mmax : {0, 10, 31, 32, 100}) {
        const auto grid = make_polar_grid(q, mmax);
        EXPECT_TRUE(is_power_of_two(grid.n_phi));
        EXPECT_GT(grid.n_phi, 2 * mmax + 1);
        EXPECT_GE(grid.n_phi, 64);
        EXPECT_EQ(grid.size(), q.size() * static_cast<std::size_t>(grid.n_phi));
    }
    EXPECT_THROW(make_polar_grid(q, -1), qring::parameter_error);
}

TEST(SpinorProduct, SectorsAreOrthogonalAndNormIsPositive) {
    const RingGeometry g(0.6);
    const auto q = make_quadrature(32, g);
    RadialSpinor a{.m = 2, .upper = {}, .lower = {}};
    RadialSpinor b{.m = 3, .upper = {}, .lower = {}};
    for (double r : q.nodes) {
        a.upper.emplace_back(std::sin(5.0 * r), 0.1);
        a.lower.emplace_back(r, -r);
        b.upper.emplace_back(1.0, 0.0);
        b.lower.emplace_back(0.0, 1.0);
    }
    EXPECT_EQ(spinor_inner_product(a, b, q), cplx(0.0, 0.0));
    const cplx nn = spinor_inner_product(a, a, q);
    EXPECT_GT(nn.real(), 0.0);
    EXPECT_NEAR(nn.imag(), 0.0, 1e-15);
    RadialSpinor bad = a;
    bad.upper.pop_back();
    EXPECT_THROW(spinor_inner_product(bad, a, q), qring::contract_error);
}

TEST(Units, DimensionlessStrength) {
    // m* = 0.05, alpha = 1e-11 eV m, r1 = 1e-7 m.
    const auto u = UnitSystem::from_physical(0.05, 1e-11, 1e-7);
    const double mstar = 0.05 * UnitSystem::kElectronMass;
    const double want = 2.0 * mstar * 1e-11 * 1.602176634e-19 * 1e-7 / std::pow(UnitSystem::kHbar, 2);
    EXPECT_NEAR(u.soi_strength, want, 1e-12 * want);
    EXPECT_GT(UnitSystem::energy_unit(0.05, 1e-7), 0.0);
}
