#pragma once

// Sinusoidally driven SOI, omega(tau)/Omega = B + A cos(nu tau): the exact
// 2x2 propagator, Floquet spin eigenpairs, the drive-independent boundary
// determinant D2(k), its root scan and the boundary-satisfying Floquet modes.

#include "qring/errors.hpp"
#include "qring/ring_model.hpp"
#include "qring/roots.hpp"
#include "qring/specfun.hpp"
#include "qring/static_spectrum.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace qring {

class Drive {
public:
    Drive(double amplitude, double shift, double frequency) : a_(amplitude), b_(shift), nu_(frequency) {
        if (!std::isfinite(amplitude) || amplitude < 0.0)
            throw qring::parameter_error("Drive: amplitude A must be finite and >= 0");
        if (!std::isfinite(shift)) throw qring::parameter_error("Drive: shift B must be finite");
        if (!std::isfinite(frequency) || !(frequency > 0.0))
            throw qring::parameter_error("Drive: frequency nu must be finite and > 0");
    }

    double amplitude() const { return a_; }
    double shift() const { return b_; }
    double nu() const { return nu_; }
    double period() const { return 2.0 * std::numbers::pi / nu_; }
    double strength(double tau) const { return b_ + a_ * std::cos(nu_ * tau); }

    /// Accumulated spin-mixing angle theta(tau) = int_0^tau k omega(t) dt.
    double theta(double k, double tau) const { return (a_ * k / nu_) * std::sin(nu_ * tau) + b_ * k * tau; }

private:
    double a_;
    double b_;
    double nu_;
};

using Matrix2c = Eigen::Matrix2cd;
using Spinor2 = Eigen::Vector2cd;

namespace detail {
inline void check_propagator_args(double k, double tau, const char* fn) {
    if (!std::isfinite(k) || !std::isfinite(tau)) throw qring::domain_error(std::string(fn) + ": non-finite input");
    if (k < 0.0) throw qring::domain_error(std::string(fn) + ": k must be >= 0");
}
} // namespace detail

/// U(tau) = exp(-i k^2 tau) exp(-i theta sigma_x) for H = k^2 + k omega(tau) sigma_x.
inline Matrix2c propagator_2x2(double k, const Drive& drive, double tau) {
    detail::check_propagator_args(k, tau, "propagator_2x2");
    const double th = drive.theta(k, tau);
    const cplx ph = std::polar(1.0, -k * k * tau);
    const cplx c = ph * std::cos(th);
    const cplx s = ph * cplx(0.0, -std::sin(th));
    Matrix2c u;
    u << c, s, s, c;
    return u;
}

/// exp(-i k^2 tau) (+-1, 1)/sqrt(2) exp(-+i theta(tau)).
inline Spinor2 floquet_eigenpair(double k, SpinBranch branch, const Drive& drive, double tau) {
    detail::check_propagator_args(k, tau, "floquet_eigenpair");
    const double sgn = branch_sign(branch);
    const cplx ph = std::polar(1.0 / std::numbers::sqrt2, -k * k * tau - sgn * drive.theta(k, tau));
    Spinor2 v;
    v << sgn * ph, ph;
    return v;
}

/// M_+ of the driven boundary problem: the boundary matrix with k_+ = k_- = k.
inline Eigen::Matrix4d floquet_matrix_plus(double k, int m, const RingGeometry& geom) {
    if (!(k > 0.0) || !std::isfinite(k)) throw qring::domain_error("floquet_matrix_plus: k must be finite and > 0");
    Eigen::Matrix4d M;
    const std::array<double, 2> radii{geom.inner(), geom.outer()};
    for (int w = 0; w < 2; ++w) {
        const auto p = specfun::cylinder_functions(m, k * radii[w]);
        M.row(2 * w) << p.j_m, p.n_m, -p.j_m, -p.n_m;
        M.row(2 * w + 1) << p.j_m1, p.n_m1, p.j_m1, p.n_m1;
    }
    return M;
}

/// M_-: M_+ with the third and fourth columns negated.
inline Eigen::Matrix4d floquet_matrix_minus(double k, int m, const RingGeometry& geom) {
    Eigen::Matrix4d M = floquet_matrix_plus(k, m, geom);
    M.col(2) *= -1.0;
    M.col(3) *= -1.0;
    return M;
}

/// D2(k) with unit-norm columns. Contains no drive parameter.
inline double floquet_boundary_determinant(double k, int m, const RingGeometry& geom) {
    return detail::normalized_determinant(floquet_matrix_plus(k, m, geom));
}

/// Spin orientation of a Floquet spatial profile: at a root of the order-m
/// cross product the profile is spin up (orbital m), at a root of the
/// order-(m+1) cross product it is spin down (orbital m+1).
enum class SpinFamily { up, down, mixed };

inline constexpr double kSpinPurityThresholdFloquet = 0.99;

struct FloquetMode {
    int m = 0;
    int n = 0;
    SpinBranch branch = SpinBranch::minus;
    double k = 0.0;
    double energy = 0.0;  // quasienergy k^2
    std::array<cplx, 4> coeffs{};  // alpha with M_+ alpha = 0
    Drive drive{0.0, 0.0, 1.0};
    SpinFamily family = SpinFamily::mixed;
    double boundary_residual = 0.0;
    double norm_deviation = 0.0;
    double radial_polarization = 0.0;
    double upper_weight = 0.0;
    double null_residual_plus = 0.0;   // |M_+ alpha| / (|M_+| |alpha|)
    double null_residual_minus = 0.0;  // |M_- alpha~| / (|M_-| |alpha~|)
    bool degenerate = false;

    double kappa() const { return m + 0.5; }
    double quasienergy() const { return k * k; }
    double reduced_quasienergy() const {
        const double r = std::fmod(k * k, drive.nu());
        return r < 0.0 ? r + drive.nu() : r;
    }
    /// Exponent of the secular phase exp(-i eps tau) including the B shift.
    double floquet_exponent() const { return k * k + branch_sign(branch) * drive.shift() * k; }

    std::array<double, 4> alpha_tilde_real() const {
        return {coeffs[0].real(), coeffs[1].real(), -coeffs[2].real(), -coeffs[3].real()};
    }

    /// Spatial profile: the first two rows of M_+(r) applied to alpha.
    std::pair<double, double> radial(double r) const {
        const auto p = specfun::cylinder_functions(m, k * r);
        const double c1 = coeffs[0].real(), c2 = coeffs[1].real(), c3 = coeffs[2].real(), c4 = coeffs[3].real();
        return {c1 * p.j_m + c2 * p.n_m - c3 * p.j_m - c4 * p.n_m, c1 * p.j_m1 + c2 * p.n_m1 + c3 * p.j_m1 + c4 * p.n_m1};
    }

    /// Time factor exp(-i k^2 tau) exp(-+i theta(tau)).
    cplx phase(double tau) const { return std::polar(1.0, -k * k * tau - branch_sign(branch) * drive.theta(k, tau)); }

    /// Periodic part: phase(tau) with the secular exp(-i floquet_exponent tau) removed.
    cplx periodic_phase(double tau) const {
        return std::polar(1.0, -branch_sign(branch) * (drive.amplitude() * k / drive.nu()) * std::sin(drive.nu() * tau));
    }

    std::array<cplx, 2> value(double r, double phi, double tau) const {
        const auto [f, g] = radial(r);
        const cplx ph = phase(tau);
        return {ph * f * std::polar(1.0, m * phi), ph * g * std::polar(1.0, (m + 1) * phi)};
    }

    RadialSpinor sample(const RadialQuadrature& q) const {
        RadialSpinor s;
        s.m = m;
        s.upper.resize(q.size());
        s.lower.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const auto [f, g] = radial(q.nodes[i]);
            s.upper[i] = f;
            s.lower[i] = g;
        }
        return s;
    }
};

inline const char* family_name(SpinFamily f) {
    switch (f) {
    case SpinFamily::up: return "up";
    case SpinFamily::down: return "down";
    default: return "mixed";
    }
}

/// Boundary-satisfying Floquet mode at a root of D2 (labels n/branch left for the caller).
inline FloquetMode build_floquet_mode(double k_root, SpinBranch branch, int m, const Drive& drive,
                                      const RingGeometry& geom, const RadialQuadrature& q) {
    const Eigen::Matrix4d M = floquet_matrix_plus(k_root, m, geom);
    const Eigen::Vector4d norms = detail::column_norms(M);
    Eigen::Matrix4d S = M;
    for (int j = 0; j < 4; ++j) S.col(j) /= norms(j);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(S, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    if (sv(3) > kRootRankTolerance * sv(0))
        throw qring::consistency_error("build_floquet_mode: k = " + std::to_string(k_root) + " is not a root of D2");

    FloquetMode mode{.m = m, .branch = branch, .k = k_root, .energy = k_root * k_root, .drive = drive};
    for (int j = 0; j < 4; ++j) mode.coeffs[static_cast<std::size_t>(j)] = svd.matrixV()(j, 3) / norms(j);
    mode.degenerate = sv(2) <= kRootRankTolerance * sv(0);
    detail::normalize_profile(mode, q, geom);

    Eigen::Vector4d alpha;
    for (int j = 0; j < 4; ++j) alpha(j) = mode.coeffs[static_cast<std::size_t>(j)].real();
    Eigen::Vector4d alpha_t = alpha;
    alpha_t(2) = -alpha_t(2);
    alpha_t(3) = -alpha_t(3);
    const Eigen::Matrix4d Mm = floquet_matrix_minus(k_root, m, geom);
    mode.null_residual_plus = (M * alpha).norm() / (M.norm() * alpha.norm());
    mode.null_residual_minus = (Mm * alpha_t).norm() / (Mm.norm() * alpha_t.norm());

    if (mode.upper_weight >= kSpinPurityThresholdFloquet) {
        mode.family = SpinFamily::up;
    } else if (mode.upper_weight <= 1.0 - kSpinPurityThresholdFloquet) {
        mode.family = SpinFamily::down;
    }
    return mode;
}

struct FloquetSectorSpectrum {
    int m = 0;
    std::vector<FloquetMode> modes;  // sorted by k
    std::vector<std::string> warnings;
    double step_used = 0.0;
};

inline double default_wavenumber_step(const RingGeometry& geom) {
    return std::min(0.05, std::numbers::pi / geom.width() / 64.0);
}

/// Roots of D2 in (0, k_max], sorted.
inline std::vector<double> find_floquet_roots(int m, double k_max, const RingGeometry& geom, double step = 0.0,
                                              double tol = 1e-12) {
    if (!(k_max > 0.0)) throw qring::parameter_error("find_floquet_roots: k_max must be positive");
    roots::BracketScanOptions opts;
    opts.step = step > 0.0 ? step : default_wavenumber_step(geom);
    opts.x_tolerance = tol;
    auto d = [&](double k) { return floquet_boundary_determinant(k, m, geom); };
    auto r = roots::find_sign_changes(d, std::min(opts.step, k_max) * 1e-3, k_max, opts);
    std::sort(r.begin(), r.end());
    return r;
}

/// Floquet modes of sector m with k in (0, k_max]. Labels: the n-th spin-up
/// and n-th spin-down profiles form doublet n; the lower k of a doublet is
/// branch '-', the upper '+'.
inline FloquetSectorSpectrum scan_floquet_spectrum(int m, double k_max, const Drive& drive, const RingGeometry& geom,
                                                   const RadialQuadrature& q, double step = 0.0) {
    FloquetSectorSpectrum out;
    out.m = m;
    out.step_used = step > 0.0 ? step : default_wavenumber_step(geom);
    for (double k : find_floquet_roots(m, k_max, geom, out.step_used))
        out.modes.push_back(build_floquet_mode(k, SpinBranch::minus, m, drive, geom, q));
    if (!detail::label_sector(out.modes))
        out.warnings.push_back("sector m=" + std::to_string(m) + ": mixed-spin Floquet profile, labels by k ordering");
    for (const auto& md : out.modes)
        if (md.degenerate)
            out.warnings.push_back("sector m=" + std::to_string(m) + ": coincident roots at k=" + std::to_string(md.k));
    return out;
}

/// The other (kappa, branch) slot that carries the same quasienergy: a spin-up
/// profile of orbital m is the spin-down profile of sector m-1 and vice versa.
inline int partner_sector(const FloquetMode& mode) {
    return mode.family == SpinFamily::up ? mode.m - 1 : mode.m + 1;
}

/// Jacobi-Anger weights J_alpha(A k / nu) of the mode's periodic phase factor.
inline specfun::HarmonicWeightTable sideband_weights(const FloquetMode& mode, int cutoff) {
    return specfun::jacobi_anger_weights(mode.drive.amplitude() * mode.k / mode.drive.nu(), cutoff);
}

} // namespace qring
