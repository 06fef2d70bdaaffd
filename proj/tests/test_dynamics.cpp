#include "oracles.hpp"
#include "qring/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qring;

namespace {

const RingGeometry kRing(0.6);

std::shared_ptr<const ModeSet> small_static_basis() {
    static const auto basis =
        make_static_basis(-3, 3, 600.0, SOIConstant(3.0), kRing, make_quadrature(48, kRing));
    return basis;
}

/// Direct grid overlap <a|b>.
cplx grid_overlap(const SpinorField& a, const SpinorField& b) {
    cplx s = 0.0;
    const double dphi = 2.0 * std::numbers::pi / a.grid.n_phi;
    for (std::size_t i = 0; i < a.grid.n_r(); ++i)
        for (int j = 0; j < a.grid.n_phi; ++j) {
            const auto k = a.grid.index(i, j);
            s += a.grid.radial_weights[i] * a.grid.radii[i] * dphi *
                 (std::conj(a.upper[k]) * b.upper[k] + std::conj(a.lower[k]) * b.lower[k]);
        }
    return s;
}

} // namespace

TEST(Basis, StaticBasisContainsLabelledModes) {
    const auto b = small_static_basis();
    EXPECT_EQ(b->kind, BasisKind::static_modes);
    EXPECT_GT(b->modes.size(), 14u);
    EXPECT_EQ(b->max_abs_order(), 4);
    EXPECT_NO_THROW(b->require(0, 1, SpinBranch::plus));
    EXPECT_THROW(b->require(9, 1, SpinBranch::plus), qring::parameter_error);
}

TEST(Expansion, SuperpositionRoundTrips) {
    const auto b = small_static_basis();
    const auto grid = make_polar_grid(b->quadrature, b->max_abs_order());
    std::vector<std::pair<std::size_t, cplx>> terms;
    for (std::size_t i = 0; i < b->modes.size(); i += 3) terms.emplace_back(i, cplx(std::cos(1.0 * i), std::sin(0.3 * i)));
    const auto e = superposition(b, terms);
    const auto field = evolve(e, 0.0, grid);
    EXPECT_NEAR(field_norm2(field), e.captured_norm, 1e-10);
    const auto back = expand_state(field, b);
    for (std::size_t i = 0; i < b->modes.size(); ++i) EXPECT_LT(std::abs(back.coefficients[i] - e.coefficients[i]), 1e-10);
    EXPECT_TRUE(back.warnings.empty());
}

TEST(Evolution, NormAndSectorWeightsAreConserved) {
    const auto b = small_static_basis();
    const auto grid = make_polar_grid(b->quadrature, b->max_abs_order());
    std::vector<std::pair<std::size_t, cplx>> terms;
    for (std::size_t i = 0; i < b->modes.size(); ++i) terms.emplace_back(i, cplx(1.0 / (1.0 + i), 0.1 * i));
    const auto e = superposition(b, terms);
    const auto w0 = sector_weights(e);
    for (double t : {0.01, 0.7, 13.0}) {
        const auto f = evolve(e, t, grid);
        EXPECT_NEAR(field_norm2(f), e.captured_norm, 1e-9 * e.captured_norm);
        const auto w = sector_weights(expand_state(f, b));
        for (const auto& [m, v] : w0) EXPECT_NEAR(w.at(m), v, 1e-12);
    }
}

TEST(Evolution, GridOverlapMatchesAutocorrelation) {
    const auto b = small_static_basis();
    const auto grid = make_polar_grid(b->quadrature, b->max_abs_order());
    PacketSpec p;
    p.r_center = 0.8;
    p.sigma_r = 0.06;
    p.sigma_phi = 0.5;
    const auto psi0 = gaussian_packet(p, kRing, grid);
    auto e = expand_state(psi0, b, 0.5);
    // Renormalise the captured part so the comparison is between normalised states.
    for (auto& c : e.coefficients) c /= std::sqrt(e.captured_norm);
    e.captured_norm = 1.0;
    const auto start = evolve(e, 0.0, grid);
    const std::vector<double> taus{0.0, 0.005, 0.02, 0.1};
    const auto ac = autocorrelation(e, taus);
    for (std::size_t i = 0; i < taus.size(); ++i)
        EXPECT_NEAR(std::abs(grid_overlap(start, evolve(e, taus[i], grid))), ac[i], 1e-10);
}

TEST(Evolution, ProbeMatchesGridSynthesis) {
    const auto b = small_static_basis();
    const auto grid = make_polar_grid(b->quadrature, b->max_abs_order());
    std::vector<std::pair<std::size_t, cplx>> terms{{0, 0.6}, {5, cplx(0.0, 0.8)}, {11, 0.3}};
    const auto e = superposition(b, terms);
    const std::size_t ir = 17;
    const int jp = 5;
    const ProbeEvaluator probe(e, grid.radii[ir], grid.phi(jp));
    for (double t : {0.0, 0.4, 2.5}) {
        const auto f = evolve(e, t, grid);
        const auto v = probe.value(t);
        EXPECT_LT(std::abs(v[0] - f.upper[grid.index(ir, jp)]), 1e-11);
        EXPECT_LT(std::abs(v[1] - f.lower[grid.index(ir, jp)]), 1e-11);
    }
    EXPECT_THROW(ProbeEvaluator(e, 0.5, 0.0), qring::domain_error);
}

TEST(Evolution, FloquetTimeFactorsMatchRungeKutta) {
    const Drive d(2.0, 0.3, 0.8);
    const auto q = make_quadrature(48, kRing);
    const auto b = make_floquet_basis(2, 2, 16.0, d, kRing, q);
    ASSERT_GE(b->modes.size(), 2u);
    for (const auto& md : b->modes) {
        const auto& src = std::get<FloquetMode>(md.source);
        const double s = branch_sign(md.branch);
        // Spin eigenvector (s, 1)/sqrt(2) of the reduced 2x2 problem at the mode's k.
        oracle::Vec2 psi{cplx(s / std::numbers::sqrt2), cplx(1.0 / std::numbers::sqrt2)};
        const double k = src.k;
        const double T = d.period();
        psi = oracle::rk4_schrodinger(
            [&](double t) {
                const double off = k * d.strength(t);
                return std::array<cplx, 4>{cplx(k * k), cplx(off), cplx(off), cplx(k * k)};
            },
            psi, 0.0, T, 400000);
        EXPECT_LT(std::abs(psi[1] * std::numbers::sqrt2 - md.phase(T)), 1e-8);
        EXPECT_LT(std::abs(md.phase(T) - src.phase(T)), 1e-12);
    }
}

TEST(Expansion, TruncationWarningAndGridContract) {
    const auto q = make_quadrature(48, kRing);
    const auto b = make_static_basis(0, 0, 200.0, SOIConstant(3.0), kRing, q);
    const auto grid = make_polar_grid(q, 40);
    const auto psi0 = gaussian_packet(PacketSpec{}, kRing, grid);
    const auto e = expand_state(psi0, b);
    EXPECT_LT(e.captured_norm, 0.9);
    ASSERT_FALSE(e.warnings.empty());
    EXPECT_NE(e.warnings.front().find("captured norm"), std::string::npos);

    PolarGrid coarse = grid;
    coarse.n_phi = 2;
    auto f = make_field(coarse);
    EXPECT_THROW(expand_state(f, b), qring::contract_error);
    PolarGrid other = make_polar_grid(make_quadrature(32, kRing), 4);
    EXPECT_THROW(evolve(e, 0.0, other), qring::contract_error);
}

TEST(Packet, NormalisedWithBoundaryWarning) {
    const auto q = make_quadrature(64, kRing);
    const auto grid = make_polar_grid(q, 30);
    std::vector<std::string> warnings;
    PacketSpec p;
    p.r_center = 0.65;
    p.sigma_r = 0.08;
    const auto f = gaussian_packet(p, kRing, grid, &warnings);
    EXPECT_NEAR(field_norm2(f), 1.0, 1e-13);
    EXPECT_FALSE(warnings.empty());
    p.r_center = 1.2;
    EXPECT_THROW(gaussian_packet(p, kRing, grid), qring::parameter_error);
}

TEST(Observables, SpinExpectationValues) {
    const auto up = local_observables(1.0, 0.0);
    EXPECT_DOUBLE_EQ(up.sz, 0.5);
    EXPECT_DOUBLE_EQ(up.sx, 0.0);
    const double h = 1.0 / std::numbers::sqrt2;
    const auto x = local_observables(h, h);
    EXPECT_NEAR(x.sx, 0.5, 1e-15);
    const auto y = local_observables(h, cplx(0.0, h));
    EXPECT_NEAR(y.sy, 0.5, 1e-15);
    EXPECT_NEAR(y.density, 1.0, 1e-15);
    EXPECT_EQ(parse_observable("Sy"), Observable::sy);
    EXPECT_THROW(parse_observable("Q"), qring::parameter_error);
}

TEST(Revival, TwoLevelBeatPeriod) {
    const auto b = small_static_basis();
    const auto e = superposition(b, {{0, 1.0 / std::numbers::sqrt2}, {1, 1.0 / std::numbers::sqrt2}});
    const auto r = revival_estimate(e);
    const double delta = std::abs(b->modes[1].energy - b->modes[0].energy);
    EXPECT_NEAR(r.revival_time, 2.0 * std::numbers::pi / delta, 1e-12 * r.revival_time);
    const auto ac = autocorrelation(e, {r.revival_time, 0.5 * r.revival_time});
    EXPECT_NEAR(ac[0], 1.0, 1e-9);
    EXPECT_NEAR(ac[1], 0.0, 1e-9);
    EXPECT_THROW(revival_estimate(superposition(b, {{0, 1.0}})), qring::parameter_error);
}

TEST(Lobes, SyntheticProfiles) {
    const int n = 256;
    auto make = [&](auto f) {
        std::vector<double> p(n);
        for (int j = 0; j < n; ++j) p[j] = f(2.0 * std::numbers::pi * j / n);
        return p;
    };
    EXPECT_EQ(count_lobes(make([](double x) { return std::exp(-std::pow(std::remainder(x, 2 * std::numbers::pi), 2)); })), 1);
    EXPECT_EQ(count_lobes(make([](double x) { return 1.0 + std::cos(2 * x); })), 2);
    EXPECT_EQ(count_lobes(make([](double x) { return 1.0 + std::cos(3 * x) + 0.02 * std::cos(40 * x); })), 3);
    EXPECT_EQ(count_lobes(make([](double) { return 1.0; })), 0);
}
