#include "oracles.hpp"
#include "qring/static_spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qring;

namespace {

const RingGeometry kRing(0.6);

double std_j(int l, double x) { return (l < 0 && (l & 1) ? -1.0 : 1.0) * std::cyl_bessel_j(std::abs(l), x); }
double std_y(int l, double x) { return (l < 0 && (l & 1) ? -1.0 : 1.0) * std::cyl_neumann(std::abs(l), x); }

/// Unnormalised boundary determinant built from libstdc++ Bessel functions.
double oracle_determinant(double eps, double w, int m) {
    const double h = 0.5 * w;
    const double kp = -h + std::sqrt(h * h + eps);
    const double km = h + std::sqrt(h * h + eps);
    Eigen::Matrix4d M;
    int row = 0;
    for (double r : {0.6, 1.0}) {
        const int a = m, b = m + 1;
        M.row(row++) << std_j(a, kp * r), std_y(a, kp * r), -std_j(a, km * r), -std_y(a, km * r);
        M.row(row++) << std_j(b, kp * r), std_y(b, kp * r), std_j(b, km * r), std_y(b, km * r);
    }
    return M.determinant();
}

/// Residual of the coupled radial equations
///   -L_m F + w (G' + (m+1) G / r) = eps F
///   -L_{m+1} G - w (F' - m F / r) = eps G,   L_l = d^2/dr^2 + (1/r) d/dr - l^2/r^2,
/// by central differences, relative to eps * max|profile|.
double ode_residual(const Eigenmode& md, double w) {
    const double h = 1e-4;
    double worst = 0.0, peak = 0.0;
    for (int i = 1; i < 50; ++i) {
        const double r = 0.6 + 0.4 * i / 50.0;
        const auto [f0, g0] = md.radial(r);
        const auto [fp, gp] = md.radial(r + h);
        const auto [fm, gm] = md.radial(r - h);
        const double f1 = (fp - fm) / (2 * h), g1 = (gp - gm) / (2 * h);
        const double f2 = (fp - 2 * f0 + fm) / (h * h), g2 = (gp - 2 * g0 + gm) / (h * h);
        const double m = md.m;
        const double lf = f2 + f1 / r - m * m * f0 / (r * r);
        const double lg = g2 + g1 / r - (m + 1) * (m + 1) * g0 / (r * r);
        const double e1 = -lf + w * (g1 + (m + 1) * g0 / r) - md.energy * f0;
        const double e2 = -lg - w * (f1 - m * f0 / r) - md.energy * g0;
        worst = std::max({worst, std::abs(e1), std::abs(e2)});
        peak = std::max({peak, std::abs(f0), std::abs(g0)});
    }
    return worst / (md.energy * peak);
}

} // namespace

TEST(Wavenumbers, SatisfyDispersion) {
    for (double w : {0.0, 1e-4, 4.0})
        for (double eps : {0.0, 1e-12, 3.0, 250.0}) {
            const auto k = wavenumbers_for_energy(eps, SOIConstant(w));
            EXPECT_NEAR(k.k_plus * k.k_plus + w * k.k_plus, eps, 1e-12 * std::max(1.0, eps));
            EXPECT_NEAR(k.k_minus * k.k_minus - w * k.k_minus, eps, 1e-12 * std::max(1.0, eps));
            EXPECT_GE(k.k_plus, 0.0);
        }
    EXPECT_THROW(wavenumbers_for_energy(-1.0, SOIConstant(4.0)), qring::domain_error);
    EXPECT_THROW(wavenumbers_for_energy(-10.0, SOIConstant(4.0)), qring::domain_error);
    EXPECT_THROW(SOIConstant(-1.0), qring::parameter_error);
}

TEST(Determinant, RootsMatchDenseScanOracle) {
    const double w = 4.0;
    for (int m : {0, 4, -3}) {
        const auto brackets =
            oracle::dense_brackets([&](double e) { return oracle_determinant(e, w, m); }, 0.5, 400.0, 0.05);
        const auto roots = find_energy_roots(m, 400.0, SOIConstant(w), kRing, default_energy_step(kRing));
        ASSERT_EQ(roots.size(), brackets.size()) << "m=" << m;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            EXPECT_GE(roots[i], brackets[i][0]);
            EXPECT_LE(roots[i], brackets[i][1]);
        }
    }
}

TEST(Spectrum, FrozenLevelsAtStrongCoupling) {
    const auto q = make_quadrature(64, kRing);
    const auto s = scan_spectrum(4, 400.0, SOIConstant(4.0), kRing, q);
    ASSERT_EQ(s.modes.size(), 4u);
    const double want[] = {66.893821029, 112.500534363, 253.920673592, 298.583791944};
    const int n[] = {1, 1, 2, 2};
    const SpinBranch b[] = {SpinBranch::minus, SpinBranch::plus, SpinBranch::minus, SpinBranch::plus};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(s.modes[i].energy, want[i], 1e-8);
        EXPECT_EQ(s.modes[i].n, n[i]);
        EXPECT_EQ(s.modes[i].branch, b[i]);
        EXPECT_LT(s.modes[i].boundary_residual, 1e-9);
        EXPECT_LT(s.modes[i].norm_deviation, 1e-10);
        EXPECT_EQ(count_radial_nodes(s.modes[i], kRing).count, n[i] - 1);
    }
    EXPECT_TRUE(s.warnings.empty());
}

TEST(Spectrum, ModesSolveRadialEquations) {
    const auto q = make_quadrature(64, kRing);
    for (double w : {0.5, 4.0}) {
        const auto s = scan_spectrum(2, 300.0, SOIConstant(w), kRing, q);
        ASSERT_FALSE(s.modes.empty());
        for (const auto& md : s.modes) EXPECT_LT(ode_residual(md, w), 1e-5) << md.energy;
    }
}

TEST(Spectrum, ModesAreOrthonormal) {
    const auto q = make_quadrature(64, kRing);
    const auto s = scan_spectrum(1, 700.0, SOIConstant(3.0), kRing, q);
    ASSERT_GE(s.modes.size(), 6u);
    for (std::size_t i = 0; i < s.modes.size(); ++i)
        for (std::size_t j = 0; j < s.modes.size(); ++j) {
            const cplx g = spinor_inner_product(s.modes[i].sample(q), s.modes[j].sample(q), q);
            EXPECT_NEAR(std::abs(g - cplx(i == j ? 1.0 : 0.0)), 0.0, 1e-9) << i << "," << j;
        }
}

TEST(Spectrum, ReversedKappaSwapsBranches) {
    const auto q = make_quadrature(64, kRing);
    const auto a = scan_spectrum(4, 600.0, SOIConstant(4.0), kRing, q);
    const auto b = scan_spectrum(-5, 600.0, SOIConstant(4.0), kRing, q);
    ASSERT_EQ(a.modes.size(), b.modes.size());
    for (std::size_t i = 0; i < a.modes.size(); ++i) {
        EXPECT_NEAR(a.modes[i].energy, b.modes[i].energy, 1e-9 * a.modes[i].energy);
        EXPECT_EQ(a.modes[i].n, b.modes[i].n);
        EXPECT_NE(a.modes[i].branch, b.modes[i].branch);
    }
}

TEST(Spectrum, ZeroCouplingUsesScalarProblem) {
    const auto q = make_quadrature(64, kRing);
    const auto s = scan_spectrum(2, 500.0, SOIConstant(0.0), kRing, q);
    EXPECT_TRUE(s.scalar_dispatch);
    std::vector<double> want;
    for (int order : {2, 3})
        for (double k : annulus_wavenumbers(order, std::sqrt(500.0), kRing)) want.push_back(k * k);
    std::sort(want.begin(), want.end());
    ASSERT_EQ(s.modes.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_NEAR(s.modes[i].energy, want[i], 1e-9 * want[i]);
        EXPECT_TRUE(s.modes[i].upper_weight > 0.999 || s.modes[i].upper_weight < 1e-3);
    }
}

TEST(Spectrum, WeakCouplingApproachesDirichletLevels) {
    const auto q = make_quadrature(64, kRing);
    const double w = 1e-4;
    for (int m : {-2, 0, 5}) {
        const auto s = scan_spectrum(m, 200.0, SOIConstant(w), kRing, q);
        for (const auto& md : s.modes) {
            double best = 1e9;
            for (int order : {m, m + 1})
                for (double k : annulus_wavenumbers(order, 20.0, kRing)) best = std::min(best, std::abs(k * k - md.energy));
            EXPECT_LT(best, 5e-4) << m << " " << md.energy;
        }
    }
}

TEST(Spectrum, ParallelSolveIsDeterministic) {
    const auto q = make_quadrature(32, kRing);
    const auto a = solve_spectrum(-3, 3, 150.0, SOIConstant(2.0), kRing, q, 1);
    const auto b = solve_spectrum(-3, 3, 150.0, SOIConstant(2.0), kRing, q, 3);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t s = 0; s < a.size(); ++s) {
        EXPECT_EQ(a[s].m, -3 + static_cast<int>(s));
        ASSERT_EQ(a[s].modes.size(), b[s].modes.size());
        for (std::size_t i = 0; i < a[s].modes.size(); ++i) EXPECT_EQ(a[s].modes[i].energy, b[s].modes[i].energy);
    }
    EXPECT_THROW(solve_spectrum(2, 1, 10.0, SOIConstant(1.0), kRing, q), qring::parameter_error);
}

TEST(Spectrum, NonRootIsRejected) {
    const auto q = make_quadrature(32, kRing);
    EXPECT_THROW(build_eigenmode(80.0, 4, SOIConstant(4.0), kRing, q), qring::consistency_error);
}

TEST(Nodes, CountsSyntheticProfiles) {
    auto two_nodes = [](double r) {
        const double s = std::sin(3.0 * std::numbers::pi * (r - 0.6) / 0.4);
        return std::pair{s, 0.5 * s};
    };
    EXPECT_EQ(count_profile_nodes(two_nodes, kRing).count, 2);
    auto shallow = [](double r) {
        const double s = std::sin(std::numbers::pi * (r - 0.6) / 0.4);
        return std::pair{s, 0.3 * std::cos(2.0 * std::numbers::pi * (r - 0.6) / 0.4) * s};
    };
    EXPECT_EQ(count_profile_nodes(shallow, kRing).count, 0);
}
