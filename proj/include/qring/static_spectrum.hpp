#pragma once

// Constant-SOI eigenproblem on the annulus: wavenumber pairs, the 4x4 boundary
// determinant, root scans per angular sector, eigenmode construction,
// spin-branch / radial labelling and radial node counting.

#include "qring/errors.hpp"
#include "qring/ring_model.hpp"
#include "qring/roots.hpp"
#include "qring/specfun.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qring {

enum class SpinBranch { minus = -1, plus = 1 };

inline char branch_symbol(SpinBranch b) { return b == SpinBranch::plus ? '+' : '-'; }
inline int branch_sign(SpinBranch b) { return b == SpinBranch::plus ? 1 : -1; }

/// Constant SOI strength omega/Omega >= 0.
class SOIConstant {
public:
    explicit SOIConstant(double strength) : strength_(strength) {
        if (!std::isfinite(strength) || strength < 0.0)
            throw qring::parameter_error("SOIConstant: omega/Omega must be finite and >= 0");
    }
    double strength() const { return strength_; }

private:
    double strength_;
};

struct WavenumberPair {
    double k_plus;
    double k_minus;
};

/// k_+ and k_- with k_+^2 + w k_+ = eps and k_-^2 - w k_- = eps.
inline WavenumberPair wavenumbers_for_energy(double eps, SOIConstant soi) {
    const double h = 0.5 * soi.strength();
    if (!std::isfinite(eps) || eps < 0.0) {
        if (std::isfinite(eps) && eps >= -h * h)
            throw qring::domain_error("wavenumbers_for_energy: negative energies are excluded");
        throw qring::domain_error("wavenumbers_for_energy: eps below -(omega/2Omega)^2 gives complex wavenumbers");
    }
    const double s = std::sqrt(h * h + eps);
    // eps / (h + s) avoids cancellation in -h + s when eps << h^2.
    const double kp = (h + s) > 0.0 ? eps / (h + s) : 0.0;
    return {kp, h + s};
}

/// Raw boundary matrix: rows (upper, lower) at r0 then r1; columns the four
/// basis spinors (J/N at k_+ with ratio +1, J/N at k_- with ratio -1).
inline Eigen::Matrix4d boundary_matrix(double eps, SOIConstant soi, int m, const RingGeometry& geom) {
    const auto k = wavenumbers_for_energy(eps, soi);
    Eigen::Matrix4d M;
    const std::array<double, 2> radii{geom.inner(), geom.outer()};
    for (int w = 0; w < 2; ++w) {
        const auto p = specfun::cylinder_functions(m, k.k_plus * radii[w]);
        const auto q = specfun::cylinder_functions(m, k.k_minus * radii[w]);
        M.row(2 * w) << p.j_m, p.n_m, -q.j_m, -q.n_m;
        M.row(2 * w + 1) << p.j_m1, p.n_m1, q.j_m1, q.n_m1;
    }
    return M;
}

namespace detail {

inline Eigen::Vector4d column_norms(const Eigen::Matrix4d& M) {
    Eigen::Vector4d n;
    for (int j = 0; j < 4; ++j) n(j) = M.col(j).norm();
    return n;
}

inline double normalized_determinant(const Eigen::Matrix4d& M) {
    const auto n = column_norms(M);
    Eigen::Matrix4d S = M;
    for (int j = 0; j < 4; ++j) {
        if (!(n(j) > 0.0) || !std::isfinite(n(j))) return std::numeric_limits<double>::quiet_NaN();
        S.col(j) /= n(j);
    }
    return S.determinant();
}

} // namespace detail

/// D(eps, omega/Omega) with unit-norm columns (zeros and sign preserved).
inline double boundary_determinant(double eps, SOIConstant soi, int m, const RingGeometry& geom) {
    return detail::normalized_determinant(boundary_matrix(eps, soi, m, geom));
}

struct Eigenmode {
    int m = 0;
    int n = 0;
    SpinBranch branch = SpinBranch::minus;
    double energy = 0.0;
    double k_plus = 0.0;
    double k_minus = 0.0;
    std::array<cplx, 4> coeffs{};
    double boundary_residual = 0.0;  // relative to peak component amplitude
    double norm_deviation = 0.0;     // |norm - 1| under a doubled-order quadrature
    double radial_polarization = 0.0; // 2 <S_r>: +1 for a/b = +1, -1 for a/b = -1
    double upper_weight = 0.0;        // fraction of the norm in the upper component
    bool degenerate = false;
    std::optional<std::array<cplx, 4>> partner_coeffs;

    double kappa() const { return m + 0.5; }

    /// Real radial profiles (F, G) of (F e^{i m phi}, G e^{i (m+1) phi}).
    std::pair<double, double> radial(double r) const {
        const auto p = specfun::cylinder_functions(m, k_plus * r);
        const auto q = specfun::cylinder_functions(m, k_minus * r);
        const double c1 = coeffs[0].real(), c2 = coeffs[1].real(), c3 = coeffs[2].real(), c4 = coeffs[3].real();
        const double f = c1 * p.j_m + c2 * p.n_m - c3 * q.j_m - c4 * q.n_m;
        const double g = c1 * p.j_m1 + c2 * p.n_m1 + c3 * q.j_m1 + c4 * q.n_m1;
        return {f, g};
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

    std::array<cplx, 2> value(double r, double phi) const {
        const auto [f, g] = radial(r);
        return {f * std::polar(1.0, m * phi), g * std::polar(1.0, (m + 1) * phi)};
    }
};

inline constexpr double kRootRankTolerance = 1e-7;

namespace detail {

struct RadialMoments {
    double norm2 = 0.0;
    double upper2 = 0.0;
    double cross = 0.0;
};

template <class Profile>
RadialMoments radial_moments(Profile&& profile, const RadialQuadrature& q) {
    RadialMoments mom;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const auto [f, g] = profile(q.nodes[i]);
        const double wr = 2.0 * std::numbers::pi * q.weights[i] * q.nodes[i];
        mom.norm2 += wr * (f * f + g * g);
        mom.upper2 += wr * f * f;
        mom.cross += wr * 2.0 * f * g;
    }
    return mom;
}

/// Normalises a profile-bearing mode in place; returns scale and sign applied.
template <class Mode>
void normalize_profile(Mode& mode, const RadialQuadrature& q, const RingGeometry& geom) {
    auto mom = radial_moments([&](double r) { return mode.radial(r); }, q);
    if (!(mom.norm2 > 0.0)) throw qring::consistency_error("eigenmode: zero norm");
    double scale = 1.0 / std::sqrt(mom.norm2);

    // Sign: dominant component positive at its largest-magnitude node.
    const bool upper_dominant = mom.upper2 >= 0.5 * mom.norm2;
    double best = 0.0;
    double best_val = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const auto [f, g] = mode.radial(q.nodes[i]);
        const double v = upper_dominant ? f : g;
        if (std::abs(v) > best) {
            best = std::abs(v);
            best_val = v;
        }
        peak = std::max({peak, std::abs(f), std::abs(g)});
    }
    if (best_val < 0.0) scale = -scale;
    for (auto& c : mode.coeffs) c *= scale;
    peak *= std::abs(scale);

    const auto [f0, g0] = mode.radial(geom.inner());
    const auto [f1, g1] = mode.radial(geom.outer());
    mode.boundary_residual = std::max({std::abs(f0), std::abs(g0), std::abs(f1), std::abs(g1)}) / peak;

    const auto finer = make_quadrature(2 * q.order, geom);
    const auto check = radial_moments([&](double r) { return mode.radial(r); }, finer);
    mode.norm_deviation = std::abs(check.norm2 - 1.0);
    mode.radial_polarization = mom.cross / mom.norm2;
    mode.upper_weight = mom.upper2 / mom.norm2;
}

} // namespace detail

/// Eigenmode at a root of D: null vector of the boundary matrix, normalised.
inline Eigenmode build_eigenmode(double eps_root, int m, SOIConstant soi, const RingGeometry& geom,
                                 const RadialQuadrature& q) {
    const Eigen::Matrix4d M = boundary_matrix(eps_root, soi, m, geom);
    const Eigen::Vector4d norms = detail::column_norms(M);
    Eigen::Matrix4d S = M;
    for (int j = 0; j < 4; ++j) S.col(j) /= norms(j);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(S, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    if (sv(3) > kRootRankTolerance * sv(0))
        throw qring::consistency_error("build_eigenmode: eps = " + std::to_string(eps_root) +
                                       " is not a root (smallest singular value ratio " +
                                       std::to_string(sv(3) / sv(0)) + ")");
    const auto k = wavenumbers_for_energy(eps_root, soi);

    auto coeffs_from = [&](int col) {
        std::array<cplx, 4> c{};
        for (int j = 0; j < 4; ++j) c[static_cast<std::size_t>(j)] = svd.matrixV()(j, col) / norms(j);
        return c;
    };

    Eigenmode mode;
    mode.m = m;
    mode.energy = eps_root;
    mode.k_plus = k.k_plus;
    mode.k_minus = k.k_minus;
    mode.coeffs = coeffs_from(3);
    detail::normalize_profile(mode, q, geom);

    if (sv(2) <= kRootRankTolerance * sv(0)) {
        mode.degenerate = true;
        Eigenmode partner = mode;
        partner.coeffs = coeffs_from(2);
        detail::normalize_profile(partner, q, geom);
        mode.partner_coeffs = partner.coeffs;
    }
    return mode;
}

struct NodeCount {
    int count = 0;
    int ambiguous = 0;
};

inline constexpr double kNodeDepth = 1e-2;
inline constexpr double kComponentPresence = 1e-3;

/// Interior circles where both spinor components vanish together. A node is a
/// local density minimum below kNodeDepth * peak across which every present
/// component changes sign; deep minima without the sign changes are reported
/// as ambiguous.
template <class Profile>
NodeCount count_profile_nodes(Profile&& profile, const RingGeometry& geom, int samples = 4000) {
    std::vector<double> f(static_cast<std::size_t>(samples) + 1);
    std::vector<double> g(f.size());
    std::vector<double> d(f.size());
    double fmax = 0.0, gmax = 0.0, peak = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double r = geom.inner() + geom.width() * i / samples;
        const auto [fv, gv] = profile(r);
        f[static_cast<std::size_t>(i)] = fv;
        g[static_cast<std::size_t>(i)] = gv;
        d[static_cast<std::size_t>(i)] = fv * fv + gv * gv;
        fmax = std::max(fmax, std::abs(fv));
        gmax = std::max(gmax, std::abs(gv));
        peak = std::max(peak, d[static_cast<std::size_t>(i)]);
    }
    const bool f_present = fmax > kComponentPresence * gmax;
    const bool g_present = gmax > kComponentPresence * fmax;

    // Local maxima of the density bound the search intervals around each minimum.
    NodeCount out;
    const auto last = static_cast<std::size_t>(samples);
    for (std::size_t i = 1; i < last; ++i) {
        if (!(d[i] <= d[i - 1] && d[i] < d[i + 1])) continue;
        if (d[i] >= kNodeDepth * peak) continue;
        std::size_t lo = i;
        while (lo > 0 && d[lo - 1] >= d[lo]) --lo;
        std::size_t hi = i;
        while (hi < last && d[hi + 1] >= d[hi]) ++hi;
        auto flips = [&](const std::vector<double>& v) { return (v[lo] < 0.0) != (v[hi] < 0.0); };
        const bool ok = (!f_present || flips(f)) && (!g_present || flips(g));
        if (ok) {
            ++out.count;
        } else {
            ++out.ambiguous;
        }
    }
    return out;
}

inline NodeCount count_radial_nodes(const Eigenmode& mode, const RingGeometry& geom, int samples = 4000) {
    return count_profile_nodes([&](double r) { return mode.radial(r); }, geom, samples);
}

struct ScanOptions {
    /// Initial bracketing step in energy; <= 0 selects min(0.25, spacing / 8).
    double step = 0.0;
    int max_halvings = 3;
    double root_tolerance = 1e-11;
};

struct SectorSpectrum {
    int m = 0;
    std::vector<Eigenmode> modes;
    std::vector<std::string> warnings;
    /// Indices of modes whose radial node count differs from n - 1 (strongly
    /// coupled high-|m| modes need not have a node per radial step).
    std::vector<std::size_t> node_mismatches;
    double step_used = 0.0;
    bool scalar_dispatch = false;
};

/// Thin-annulus estimate of the lowest radial level spacing, (pi / width)^2 * 3.
inline double thin_annulus_spacing(const RingGeometry& geom) {
    const double e1 = std::pow(std::numbers::pi / geom.width(), 2);
    return 3.0 * e1;
}

inline double default_energy_step(const RingGeometry& geom) {
    return std::min(0.25, thin_annulus_spacing(geom) / 8.0);
}

/// Roots of D(eps) in (0, eps_max] for omega > 0 (sorted).
inline std::vector<double> find_energy_roots(int m, double eps_max, SOIConstant soi, const RingGeometry& geom,
                                             double step, double tol = 1e-11) {
    roots::BracketScanOptions opts;
    opts.step = step;
    opts.x_tolerance = tol;
    auto d = [&](double e) {
        try {
            return boundary_determinant(e, soi, m, geom);
        } catch (const qring::domain_error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    const double lo = std::min(step, eps_max) * 1e-3;
    auto r = roots::find_sign_changes(d, lo, eps_max, opts);
    std::sort(r.begin(), r.end());
    return r;
}

/// Dirichlet wavenumbers of the scalar annulus problem for order m in (0, k_max].
inline std::vector<double> annulus_wavenumbers(int m, double k_max, const RingGeometry& geom, double step = 0.02,
                                               double tol = 1e-13) {
    roots::BracketScanOptions opts;
    opts.step = step;
    opts.x_tolerance = tol;
    auto x = [&](double k) { return specfun::cross_product_det(m, k, geom.inner(), geom.outer()); };
    auto r = roots::find_sign_changes(x, std::min(step, k_max) * 1e-3, k_max, opts);
    std::sort(r.begin(), r.end());
    return r;
}

namespace detail {

inline constexpr double kPolarizationLabelThreshold = 0.2;
inline constexpr double kSpinPurityThreshold = 0.9;

/// Assigns (n, branch) within one sector; modes must be energy-sorted.
/// Returns false when only the consecutive-pairing fallback applied.
template <class Mode>
bool label_sector(std::vector<Mode>& modes) {
    if (modes.empty()) return true;
    const bool polarized = std::all_of(modes.begin(), modes.end(), [](const Mode& md) {
        return std::abs(md.radial_polarization) >= kPolarizationLabelThreshold;
    });
    if (polarized) {
        int n_plus = 0, n_minus = 0;
        for (auto& md : modes) {
            md.branch = md.radial_polarization > 0.0 ? SpinBranch::plus : SpinBranch::minus;
            md.n = md.branch == SpinBranch::plus ? ++n_plus : ++n_minus;
        }
        return true;
    }
    const bool spin_pure = std::all_of(modes.begin(), modes.end(), [](const Mode& md) {
        return md.upper_weight >= kSpinPurityThreshold || md.upper_weight <= 1.0 - kSpinPurityThreshold;
    });
    if (spin_pure) {
        // Doublet n = (n-th spin-up level, n-th spin-down level); lower member is '-'.
        std::vector<std::size_t> up, down;
        for (std::size_t i = 0; i < modes.size(); ++i) (modes[i].upper_weight >= 0.5 ? up : down).push_back(i);
        int up_lower = 0, down_lower = 0;
        const std::size_t pairs = std::min(up.size(), down.size());
        for (std::size_t n = 0; n < pairs; ++n) {
            auto& a = modes[up[n]];
            auto& b = modes[down[n]];
            a.n = b.n = static_cast<int>(n) + 1;
            const bool up_is_lower = a.energy <= b.energy;
            a.branch = up_is_lower ? SpinBranch::minus : SpinBranch::plus;
            b.branch = up_is_lower ? SpinBranch::plus : SpinBranch::minus;
            (up_is_lower ? up_lower : down_lower)++;
        }
        const bool up_lower_usually = up_lower >= down_lower;
        for (std::size_t n = pairs; n < up.size(); ++n) {
            modes[up[n]].n = static_cast<int>(n) + 1;
            modes[up[n]].branch = up_lower_usually ? SpinBranch::minus : SpinBranch::plus;
        }
        for (std::size_t n = pairs; n < down.size(); ++n) {
            modes[down[n]].n = static_cast<int>(n) + 1;
            modes[down[n]].branch = up_lower_usually ? SpinBranch::plus : SpinBranch::minus;
        }
        return true;
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
        modes[i].n = static_cast<int>(i / 2) + 1;
        modes[i].branch = (i % 2 == 0) ? SpinBranch::minus : SpinBranch::plus;
    }
    return false;
}

} // namespace detail

/// Eigenmodes of sector kappa = m + 1/2 with energies in (0, eps_max], labelled
/// (n, branch). omega = 0 is dispatched to the scalar cross-product problem.
inline SectorSpectrum scan_spectrum(int m, double eps_max, SOIConstant soi, const RingGeometry& geom,
                                    const RadialQuadrature& q, const ScanOptions& opts = {}) {
    if (!(eps_max > 0.0)) throw qring::parameter_error("scan_spectrum: eps_max must be positive");
    SectorSpectrum out;
    out.m = m;
    double step = opts.step > 0.0 ? opts.step : default_energy_step(geom);

    if (soi.strength() == 0.0) {
        out.scalar_dispatch = true;
        const double k_max = std::sqrt(eps_max);
        std::vector<double> energies;
        for (int order : {m, m + 1})
            for (double k : annulus_wavenumbers(order, k_max, geom)) energies.push_back(k * k);
        std::sort(energies.begin(), energies.end());
        for (double e : energies) out.modes.push_back(build_eigenmode(e, m, soi, geom, q));
        detail::label_sector(out.modes);
        out.step_used = 0.0;
        return out;
    }

    auto roots = find_energy_roots(m, eps_max, soi, geom, step, opts.root_tolerance);
    for (int attempt = 0;; ++attempt) {
        out.modes.clear();
        out.node_mismatches.clear();
        for (double e : roots) out.modes.push_back(build_eigenmode(e, m, soi, geom, q));
        if (!detail::label_sector(out.modes))
            out.warnings.push_back("sector m=" + std::to_string(m) +
                                   ": branch labels from energy ordering only (weak polarization)");
        for (std::size_t i = 0; i < out.modes.size(); ++i) {
            const auto nodes = count_radial_nodes(out.modes[i], geom);
            if (nodes.count != out.modes[i].n - 1 || nodes.ambiguous != 0) out.node_mismatches.push_back(i);
        }
        out.step_used = step;
        if (out.node_mismatches.empty()) return out;
        // A node-count jump may signal a missed close pair; rescan finer and
        // keep the finer root set only if it is larger.
        if (attempt == opts.max_halvings) {
            out.warnings.push_back("sector m=" + std::to_string(m) + ": node counts still differ from n-1 at step " +
                                   std::to_string(step));
            return out;
        }
        auto finer = find_energy_roots(m, eps_max, soi, geom, 0.5 * step, opts.root_tolerance);
        if (finer.size() <= roots.size()) return out;
        out.warnings.push_back("sector m=" + std::to_string(m) + ": rescan at step " + std::to_string(0.5 * step) +
                               " found " + std::to_string(finer.size() - roots.size()) + " additional root(s)");
        roots = std::move(finer);
        step *= 0.5;
    }
}

/// Sectors m_min..m_max solved in parallel; result ordered by m.
inline std::vector<SectorSpectrum> solve_spectrum(int m_min, int m_max, double eps_max, SOIConstant soi,
                                                  const RingGeometry& geom, const RadialQuadrature& q,
                                                  unsigned threads = 1, const ScanOptions& opts = {}) {
    if (m_max < m_min) throw qring::parameter_error("solve_spectrum: empty sector range");
    std::vector<SectorSpectrum> out(static_cast<std::size_t>(m_max - m_min + 1));
    threads = std::max(1u, threads);
    int next = m_min;
    while (next <= m_max) {
        std::vector<std::future<SectorSpectrum>> batch;
        for (unsigned t = 0; t < threads && next <= m_max; ++t, ++next)
            batch.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred,
                                       [=, &geom, &q] { return scan_spectrum(next, eps_max, soi, geom, q, opts); }));
        for (auto& f : batch) {
            auto s = f.get();
            out[static_cast<std::size_t>(s.m - m_min)] = std::move(s);
        }
    }
    return out;
}

} // namespace qring
