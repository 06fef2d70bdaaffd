#include "oracles.hpp"
#include "qring/signal.hpp"
#include "qring/specfun.hpp"
#include "qring/static_spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace qring;
using specfun::bessel_j;
using specfun::bessel_n;

namespace {

struct ReferenceRow {
    int m;
    double x;
    double j;
    double y;
};

const ReferenceRow kReference[] = {
#include "data/bessel_reference.inc"
};

double rel_err(double got, double want) {
    if (want == 0.0) return std::abs(got);
    return std::abs(got - want) / std::abs(want);
}

} // namespace

TEST(Bessel, ValuesAtOrigin) {
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(3, 0.0), 0.0);
    EXPECT_EQ(bessel_j(-3, 0.0), 0.0);
}

TEST(Bessel, MatchesHighPrecisionTable) {
    int checked = 0;
    for (const auto& row : kReference) {
        if (std::abs(row.m) > 60) continue;
        EXPECT_LT(rel_err(bessel_j(row.m, row.x), row.j), 1e-12) << "J_" << row.m << "(" << row.x << ")";
        if (row.x >= 1e-2 && std::isfinite(row.y) && std::abs(row.y) < 1e300) {
            EXPECT_LT(rel_err(bessel_n(row.m, row.x), row.y), 1e-10) << "N_" << row.m << "(" << row.x << ")";
        }
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(Bessel, FirstZeroOfJ0FromSeriesBisection) {
    const double x0 = oracle::bisect([](double x) { return oracle::series_j(0, x); }, 2.0, 3.0);
    EXPECT_NEAR(x0, 2.404825557695773, 1e-13);
    EXPECT_LT(std::abs(bessel_j(0, x0)), 1e-14);
}

TEST(Bessel, FirstZeroOfY0FromIntegralRepresentation) {
    const double y0 = oracle::bisect([](double x) { return oracle::integral_y(0, x); }, 0.5, 1.5, 1e-13);
    EXPECT_NEAR(y0, 0.8935769662791675, 1e-9);
    EXPECT_LT(std::abs(bessel_n(0, y0)), 1e-9);
}

TEST(Bessel, IntegralRepresentationOfHigherOrderY) {
    for (int n : {1, 4, 9})
        for (double x : {0.7, 3.3, 11.0}) {
            const double want = oracle::integral_y(n, x);
            EXPECT_LT(std::abs(bessel_n(n, x) - want), 1e-9 * std::max(1.0, std::abs(want))) << n << " " << x;
        }
}

TEST(Bessel, WronskianOverGrid) {
    const int samples = 10000;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const int m = i % 41;
        const double x = 0.05 * std::pow(200.0 / 0.05, static_cast<double>(i) / (samples - 1));
        const auto c = specfun::cylinder_functions(m, x);
        const double w = c.j_m1 * c.n_m - c.j_m * c.n_m1;
        worst = std::max(worst, std::abs(w * std::numbers::pi * x / 2.0 - 1.0));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Bessel, ReflectionIsExact) {
    for (int m = 1; m <= 40; ++m)
        for (double x : {0.3, 2.0, 17.5, 120.0}) {
            const double s = (m % 2) ? -1.0 : 1.0;
            EXPECT_EQ(bessel_j(-m, x), s * bessel_j(m, x));
            EXPECT_EQ(bessel_n(-m, x), s * bessel_n(m, x));
        }
}

TEST(Bessel, ThreeTermRecurrence) {
    for (int m = 1; m <= 40; ++m)
        for (double x : {0.2, 1.5, 9.0, 45.0, 180.0}) {
            for (auto z : {bessel_j, bessel_n}) {
                const double a = z(m - 1, x), b = z(m + 1, x), c = 2.0 * m / x * z(m, x);
                const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
                EXPECT_LT(std::abs(a + b - c), 1e-9 * scale) << m << " " << x;
            }
        }
}

TEST(Bessel, CylinderFunctionsMatchScalarCalls) {
    for (int m : {-7, -1, 0, 3, 25})
        for (double x : {0.4, 6.0, 60.0}) {
            const auto c = specfun::cylinder_functions(m, x);
            EXPECT_NEAR(c.j_m, bessel_j(m, x), 1e-14);
            EXPECT_NEAR(c.j_m1, bessel_j(m + 1, x), 1e-14);
            EXPECT_LT(rel_err(c.n_m, bessel_n(m, x)), 1e-13);
            EXPECT_LT(rel_err(c.n_m1, bessel_n(m + 1, x)), 1e-13);
        }
}

TEST(Bessel, AgreesWithLibstdcxx) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> order(0, 30);
    std::uniform_real_distribution<double> arg(0.1, 80.0);
    for (int i = 0; i < 500; ++i) {
        const int m = order(rng);
        const double x = arg(rng);
        const double j = std::cyl_bessel_j(static_cast<double>(m), x);
        const double y = std::cyl_neumann(static_cast<double>(m), x);
        EXPECT_LT(std::abs(bessel_j(m, x) - j), 1e-10 * std::max(1.0, std::abs(j)));
        EXPECT_LT(std::abs(bessel_n(m, x) - y), 1e-10 * std::max(1.0, std::abs(y)));
    }
}

TEST(Bessel, DomainErrors) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(bessel_j(0, nan), qring::domain_error);
    EXPECT_THROW(bessel_j(0, -1.0), qring::domain_error);
    EXPECT_THROW(bessel_n(0, 0.0), qring::domain_error);
    EXPECT_THROW(bessel_n(2, -3.0), qring::domain_error);
    EXPECT_THROW(bessel_j(specfun::kMaxSupportedOrder + 2, 1.0), qring::domain_error);
}

TEST(JacobiAnger, ZeroArgumentIsDelta) {
    const auto t = specfun::jacobi_anger_weights(0.0, 5);
    for (int a = -5; a <= 5; ++a) EXPECT_EQ(t(a), a == 0 ? 1.0 : 0.0);
}

TEST(JacobiAnger, ParsevalAndSymmetry) {
    for (double z : {0.5, 3.0, 10.0, 50.0, -7.0}) {
        const auto t = specfun::jacobi_anger_weights(z, specfun::recommended_cutoff(z));
        EXPECT_NEAR(t.sum_of_squares(), 1.0, 1e-10) << z;
        for (int a = 1; a <= t.cutoff(); ++a) EXPECT_EQ(t(-a), (a % 2 ? -1.0 : 1.0) * t(a));
    }
}

TEST(JacobiAnger, MatchesDirectDft) {
    const double z = 3.0;
    const int n = 256;
    std::vector<std::complex<double>> x(n);
    for (int j = 0; j < n; ++j) x[j] = std::polar(1.0, z * std::sin(2.0 * std::numbers::pi * j / n));
    const auto c = oracle::naive_dft(x, -1);
    const auto t = specfun::jacobi_anger_weights(z, 20);
    for (int a = -20; a <= 20; ++a) {
        const auto v = c[static_cast<std::size_t>((a + n) % n)] / static_cast<double>(n);
        EXPECT_NEAR(v.real(), t(a), 1e-12);
        EXPECT_NEAR(v.imag(), 0.0, 1e-12);
    }
}

TEST(JacobiAnger, TruncationIsReported) {
    EXPECT_THROW(specfun::jacobi_anger_weights(10.0, 5), qring::truncation_error);
    EXPECT_THROW(specfun::jacobi_anger_weights(1.0, -1), qring::parameter_error);
}

TEST(CrossProduct, MatchesLibstdcxxFormula) {
    for (int m : {0, 4, 11})
        for (double k : {1.3, 7.7, 23.0}) {
            const double dm = m;
            const double want = std::cyl_bessel_j(dm, 0.6 * k) * std::cyl_neumann(dm, k) -
                                std::cyl_bessel_j(dm, k) * std::cyl_neumann(dm, 0.6 * k);
            EXPECT_LT(std::abs(specfun::cross_product_det(m, k, 0.6, 1.0) - want), 1e-10 * std::max(1.0, std::abs(want)));
        }
}

TEST(CrossProduct, RootsMatchDenseScanOracle) {
    const RingGeometry geom(0.6);
    for (int m : {0, 3}) {
        auto x = [m](double k) {
            return oracle::series_j(m, 0.6 * k) * oracle::integral_y(m, k, 4000) -
                   oracle::series_j(m, k) * oracle::integral_y(m, 0.6 * k, 4000);
        };
        const auto brackets = oracle::dense_brackets(x, 0.5, 20.0, 0.02);
        const auto roots = annulus_wavenumbers(m, 20.0, geom);
        ASSERT_EQ(roots.size(), brackets.size()) << m;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            EXPECT_GE(roots[i], brackets[i][0]);
            EXPECT_LE(roots[i], brackets[i][1]);
        }
    }
    // Thin-annulus estimate of the lowest m = 0 root.
    EXPECT_NEAR(annulus_wavenumbers(0, 10.0, geom).front(), std::numbers::pi / 0.4, 0.05 * std::numbers::pi / 0.4);
}

TEST(CrossProduct, DomainErrors) {
    EXPECT_THROW(specfun::cross_product_det(0, 1.0, 0.0, 1.0), qring::domain_error);
    EXPECT_THROW(specfun::cross_product_det(0, 1.0, 1.0, 0.5), qring::domain_error);
    EXPECT_THROW(specfun::cross_product_det(0, -1.0, 0.5, 1.0), qring::domain_error);
}
