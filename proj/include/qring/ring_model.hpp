#pragma once

// Annulus geometry, dimensionless units, radial Gauss-Legendre quadrature,
// polar sampling grids and the kappa-sector spinor inner product.
//
// Units: the outer radius r1 is 1, energies are in hbar*Omega with
// Omega = hbar / (2 m* r1^2), wavenumbers in 1/r1 and time tau in 1/Omega,
// so a level of energy eps evolves with the phase exp(-i eps tau).

#include "qring/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

namespace qring {

using cplx = std::complex<double>;

class RingGeometry {
public:
    /// rho = r0 / r1, must lie in (0, 1).
    explicit RingGeometry(double rho) : rho_(rho) {
        if (!(rho > 0.0 && rho < 1.0))
            throw qring::parameter_error("RingGeometry: rho = r0/r1 must satisfy 0 < rho < 1, got " +
                                         std::to_string(rho));
    }

    double rho() const { return rho_; }
    double inner() const { return rho_; }
    double outer() const { return 1.0; }
    double width() const { return 1.0 - rho_; }
    bool contains(double r) const { return r >= rho_ && r <= 1.0; }

private:
    double rho_;
};

/// Dimensionless SOI strength omega/Omega = 2 m* alpha r1 / hbar^2.
struct UnitSystem {
    double soi_strength = 0.0;

    static constexpr double kHbar = 1.054571817e-34;      // J s
    static constexpr double kElectronMass = 9.1093837015e-31; // kg

    /// effective_mass in units of the free electron mass, alpha in eV*m, r1 in m.
    static UnitSystem from_physical(double effective_mass, double alpha_ev_m, double r1_m) {
        constexpr double kEv = 1.602176634e-19;
        const double mstar = effective_mass * kElectronMass;
        return {2.0 * mstar * alpha_ev_m * kEv * r1_m / (kHbar * kHbar)};
    }

    /// hbar * Omega in joule.
    static double energy_unit(double effective_mass, double r1_m) {
        const double mstar = effective_mass * kElectronMass;
        return kHbar * kHbar / (2.0 * mstar * r1_m * r1_m);
    }
};

/// Gauss-Legendre rule mapped to [rho, 1].
struct RadialQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
    double rho = 0.0;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = wi;
        w[static_cast<std::size_t>(n - 1 - i)] = wi;
    }
}

} // namespace detail

inline RadialQuadrature make_quadrature(int order, const RingGeometry& geom) {
    if (order < 2) throw qring::parameter_error("make_quadrature: order must be >= 2");
    std::vector<double> x;
    std::vector<double> w;
    detail::gauss_legendre(order, x, w);
    RadialQuadrature q;
    q.order = order;
    q.rho = geom.rho();
    const double half = 0.5 * geom.width();
    const double mid = 0.5 * (geom.rho() + 1.0);
    q.nodes.resize(x.size());
    q.weights.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        q.nodes[i] = mid + half * x[i];
        q.weights[i] = half * w[i];
    }
    return q;
}

inline constexpr int kDefaultQuadratureOrder = 64;

/// Starts at `order` and doubles until norm_of(q) changes by less than tol.
/// norm_of typically returns the norm of the highest retained radial mode.
template <class NormFn>
RadialQuadrature self_validating_quadrature(const RingGeometry& geom, NormFn&& norm_of,
                                            int order = kDefaultQuadratureOrder, double tol = 1e-10,
                                            int max_order = 2048) {
    auto q = make_quadrature(order, geom);
    double prev = norm_of(q);
    while (order < max_order) {
        auto finer = make_quadrature(2 * order, geom);
        const double cur = norm_of(finer);
        if (std::abs(cur - prev) < tol * std::max(1.0, std::abs(cur))) return q;
        q = std::move(finer);
        prev = cur;
        order *= 2;
    }
    throw qring::truncation_error("self_validating_quadrature: no convergence up to order " +
                                  std::to_string(max_order));
}

/// Polar sampling: radial nodes of a quadrature, uniform azimuth on [0, 2 pi).
struct PolarGrid {
    std::vector<double> radii;
    std::vector<double> radial_weights;  // quadrature weights (without the r factor)
    int n_phi = 0;

    std::size_t n_r() const { return radii.size(); }
    std::size_t size() const { return radii.size() * static_cast<std::size_t>(n_phi); }
    double phi(int j) const { return 2.0 * std::numbers::pi * j / n_phi; }
    std::size_t index(std::size_t ir, int jphi) const { return ir * static_cast<std::size_t>(n_phi) + jphi; }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Grid resolving azimuthal orders up to max_abs_order (both spinor components).
inline PolarGrid make_polar_grid(const RadialQuadrature& q, int max_abs_order, int min_n_phi = 64) {
    if (max_abs_order < 0) throw qring::parameter_error("make_polar_grid: negative order bound");
    int n = 1;
    while (n < min_n_phi || n <= 2 * max_abs_order + 1) n *= 2;
    PolarGrid g;
    g.radii = q.nodes;
    g.radial_weights = q.weights;
    g.n_phi = n;
    return g;
}

/// Radially sampled kappa-sector spinor (upper(r) e^{i m phi}, lower(r) e^{i (m+1) phi}).
struct RadialSpinor {
    int m = 0;
    std::vector<cplx> upper;
    std::vector<cplx> lower;
};

/// <<f|g>> = int int <f|g> r dphi dr with the azimuthal integral done analytically.
inline cplx spinor_inner_product(const RadialSpinor& f, const RadialSpinor& g, const RadialQuadrature& q) {
    if (f.upper.size() != q.size() || f.lower.size() != q.size() || g.upper.size() != q.size() ||
        g.lower.size() != q.size())
        throw qring::contract_error("spinor_inner_product: spinors must be sampled at the quadrature nodes");
    if (f.m != g.m) return {0.0, 0.0};
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double wr = q.weights[i] * q.nodes[i];
        s += wr * (std::conj(f.upper[i]) * g.upper[i] + std::conj(f.lower[i]) * g.lower[i]);
    }
    return 2.0 * std::numbers::pi * s;
}

} // namespace qring
