#pragma once

// Mode sets (static or Floquet), state preparation and expansion, time
// evolution on polar grids, local observables, probe time series,
// autocorrelation, revival-time estimate and azimuthal lobe detection.

#include "qring/errors.hpp"
#include "qring/floquet.hpp"
#include "qring/ring_model.hpp"
#include "qring/signal.hpp"
#include "qring/static_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace qring {

enum class BasisKind { static_modes, floquet_modes };

inline const char* basis_kind_name(BasisKind k) { return k == BasisKind::static_modes ? "static" : "floquet"; }

/// One basis element: spatial profile sampled at the quadrature nodes plus its
/// time factor exp(-i (energy tau + sign (fm_index sin(nu tau) + shift_rate tau))).
struct BasisMode {
    int m = 0;
    int n = 0;
    SpinBranch branch = SpinBranch::minus;
    double energy = 0.0;
    int phase_sign = 0;
    double fm_index = 0.0;
    double nu = 0.0;
    double shift_rate = 0.0;
    std::variant<Eigenmode, FloquetMode> source;
    std::vector<double> upper;
    std::vector<double> lower;

    cplx phase(double tau) const {
        double arg = energy * tau;
        if (phase_sign != 0) arg += phase_sign * (fm_index * std::sin(nu * tau) + shift_rate * tau);
        return std::polar(1.0, -arg);
    }

    std::pair<double, double> radial(double r) const {
        return std::visit([r](const auto& md) { return md.radial(r); }, source);
    }

    double kappa() const { return m + 0.5; }
};

inline BasisMode make_basis_mode(const Eigenmode& md, const RadialQuadrature& q) {
    BasisMode b{.m = md.m, .n = md.n, .branch = md.branch, .energy = md.energy, .source = md, .upper = {}, .lower = {}};
    const auto s = md.sample(q);
    for (std::size_t i = 0; i < q.size(); ++i) {
        b.upper.push_back(s.upper[i].real());
        b.lower.push_back(s.lower[i].real());
    }
    return b;
}

inline BasisMode make_basis_mode(const FloquetMode& md, const RadialQuadrature& q) {
    BasisMode b{.m = md.m,
                .n = md.n,
                .branch = md.branch,
                .energy = md.k * md.k,
                .phase_sign = branch_sign(md.branch),
                .fm_index = md.drive.amplitude() * md.k / md.drive.nu(),
                .nu = md.drive.nu(),
                .shift_rate = md.drive.shift() * md.k,
                .source = md,
                .upper = {},
                .lower = {}};
    const auto s = md.sample(q);
    for (std::size_t i = 0; i < q.size(); ++i) {
        b.upper.push_back(s.upper[i].real());
        b.lower.push_back(s.lower[i].real());
    }
    return b;
}

struct ModeSet {
    BasisKind kind = BasisKind::static_modes;
    RingGeometry geometry{0.5};
    RadialQuadrature quadrature;
    std::vector<BasisMode> modes;
    std::vector<std::string> warnings;
    int m_min = 0;
    int m_max = 0;

    /// Largest |azimuthal order| carried by either spinor component.
    int max_abs_order() const { return std::max(std::abs(m_min), std::abs(m_max + 1)); }
    int n_max() const {
        int n = 0;
        for (const auto& b : modes) n = std::max(n, b.n);
        return n;
    }

    std::optional<std::size_t> find(int m, int n, SpinBranch branch) const {
        for (std::size_t i = 0; i < modes.size(); ++i)
            if (modes[i].m == m && modes[i].n == n && modes[i].branch == branch) return i;
        return std::nullopt;
    }

    std::size_t require(int m, int n, SpinBranch branch) const {
        const auto i = find(m, n, branch);
        if (!i)
            throw qring::parameter_error("mode (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ", " +
                                         branch_symbol(branch) + ") is not in the basis");
        return *i;
    }
};

/// Static eigenmodes of sectors m_min..m_max with energy <= eps_max.
inline std::shared_ptr<const ModeSet> make_static_basis(int m_min, int m_max, double eps_max, SOIConstant soi,
                                                        const RingGeometry& geom, const RadialQuadrature& q,
                                                        unsigned threads = 1) {
    auto set = std::make_shared<ModeSet>();
    set->kind = BasisKind::static_modes;
    set->geometry = geom;
    set->quadrature = q;
    set->m_min = m_min;
    set->m_max = m_max;
    for (const auto& sector : solve_spectrum(m_min, m_max, eps_max, soi, geom, q, threads)) {
        for (const auto& md : sector.modes) set->modes.push_back(make_basis_mode(md, q));
        set->warnings.insert(set->warnings.end(), sector.warnings.begin(), sector.warnings.end());
    }
    return set;
}

/// Floquet modes of sectors m_min..m_max with k <= k_max.
inline std::shared_ptr<const ModeSet> make_floquet_basis(int m_min, int m_max, double k_max, const Drive& drive,
                                                         const RingGeometry& geom, const RadialQuadrature& q) {
    if (m_max < m_min) throw qring::parameter_error("make_floquet_basis: empty sector range");
    auto set = std::make_shared<ModeSet>();
    set->kind = BasisKind::floquet_modes;
    set->geometry = geom;
    set->quadrature = q;
    set->m_min = m_min;
    set->m_max = m_max;
    for (int m = m_min; m <= m_max; ++m) {
        const auto sector = scan_floquet_spectrum(m, k_max, drive, geom, q);
        for (const auto& md : sector.modes) set->modes.push_back(make_basis_mode(md, q));
        set->warnings.insert(set->warnings.end(), sector.warnings.begin(), sector.warnings.end());
    }
    return set;
}

/// Complex 2-spinor sampled on a polar grid, index grid.index(ir, jphi).
struct SpinorField {
    PolarGrid grid;
    std::vector<cplx> upper;
    std::vector<cplx> lower;
    double time = 0.0;
};

inline SpinorField make_field(const PolarGrid& grid, double time = 0.0) {
    return {grid, std::vector<cplx>(grid.size()), std::vector<cplx>(grid.size()), time};
}

/// Grid quadrature of <psi|psi>.
inline double field_norm2(const SpinorField& f) {
    double s = 0.0;
    const double dphi = 2.0 * std::numbers::pi / f.grid.n_phi;
    for (std::size_t i = 0; i < f.grid.n_r(); ++i) {
        double ring = 0.0;
        for (int j = 0; j < f.grid.n_phi; ++j) {
            const auto k = f.grid.index(i, j);
            ring += std::norm(f.upper[k]) + std::norm(f.lower[k]);
        }
        s += f.grid.radial_weights[i] * f.grid.radii[i] * ring * dphi;
    }
    return s;
}

inline double wrapped_angle_distance(double a, double b) {
    double d = std::remainder(a - b, 2.0 * std::numbers::pi);
    return std::abs(d);
}

struct PacketSpec {
    double r_center = 0.8;
    double phi_center = 0.0;
    double sigma_r = 0.05;
    double sigma_phi = 0.3;
    cplx spin_up = 1.0;
    cplx spin_down = 0.0;
};

/// Gaussian packet masked by sin(pi (r - rho) / (1 - rho)), normalised on the grid.
inline SpinorField gaussian_packet(const PacketSpec& p, const RingGeometry& geom, const PolarGrid& grid,
                                   std::vector<std::string>* warnings = nullptr) {
    if (!(p.r_center > geom.inner() && p.r_center < geom.outer()))
        throw qring::parameter_error("gaussian_packet: centre radius must lie strictly inside the annulus");
    if (!(p.sigma_r > 0.0) || !(p.sigma_phi > 0.0))
        throw qring::parameter_error("gaussian_packet: widths must be positive");
    const double spin_norm = std::sqrt(std::norm(p.spin_up) + std::norm(p.spin_down));
    if (!(spin_norm > 0.0)) throw qring::parameter_error("gaussian_packet: spin vector must be non-zero");
    if (warnings) {
        const double s = std::numbers::sqrt2 * p.sigma_r;
        const double outside = 0.5 * std::erfc((p.r_center - geom.inner()) / s) + 0.5 * std::erfc((geom.outer() - p.r_center) / s);
        if (outside > 1e-6)
            warnings->push_back("gaussian_packet: " + std::to_string(outside) +
                                " of the radial Gaussian lies outside the annulus before masking");
    }
    auto f = make_field(grid);
    for (std::size_t i = 0; i < grid.n_r(); ++i) {
        const double r = grid.radii[i];
        const double radial = std::exp(-(r - p.r_center) * (r - p.r_center) / (4.0 * p.sigma_r * p.sigma_r)) *
                              std::sin(std::numbers::pi * (r - geom.inner()) / geom.width());
        for (int j = 0; j < grid.n_phi; ++j) {
            const double d = wrapped_angle_distance(grid.phi(j), p.phi_center);
            const double amp = radial * std::exp(-d * d / (4.0 * p.sigma_phi * p.sigma_phi));
            f.upper[grid.index(i, j)] = amp * p.spin_up / spin_norm;
            f.lower[grid.index(i, j)] = amp * p.spin_down / spin_norm;
        }
    }
    const double scale = 1.0 / std::sqrt(field_norm2(f));
    for (auto& v : f.upper) v *= scale;
    for (auto& v : f.lower) v *= scale;
    return f;
}

struct StateExpansion {
    std::shared_ptr<const ModeSet> basis;
    std::vector<cplx> coefficients;  // one per basis mode
    double captured_norm = 0.0;      // sum |beta|^2
    std::vector<std::string> warnings;

    BasisKind kind() const { return basis->kind; }
};

inline constexpr double kDefaultNormTolerance = 1e-3;

namespace detail {

inline void check_grid(const PolarGrid& grid, const ModeSet& basis) {
    const auto& q = basis.quadrature;
    if (grid.radii.size() != q.size())
        throw qring::contract_error("grid radii must be the basis quadrature nodes");
    for (std::size_t i = 0; i < q.size(); ++i)
        if (grid.radii[i] != q.nodes[i]) throw qring::contract_error("grid radii must be the basis quadrature nodes");
    if (grid.n_phi <= 2 * basis.max_abs_order() + 1)
        throw qring::contract_error("grid has too few azimuthal points for the basis orders (aliasing)");
}

inline std::size_t wrap_index(int m, int n) { return static_cast<std::size_t>(((m % n) + n) % n); }

} // namespace detail

/// Coefficients <mode|psi0> for every basis mode.
inline StateExpansion expand_state(const SpinorField& psi0, std::shared_ptr<const ModeSet> basis,
                                   double norm_tolerance = kDefaultNormTolerance) {
    detail::check_grid(psi0.grid, *basis);
    const auto& grid = psi0.grid;
    const int np = grid.n_phi;
    const std::size_t nr = grid.n_r();
    // Azimuthal Fourier coefficients c[ir][m] = (1/np) sum_j psi(r_i, phi_j) e^{-i m phi_j}.
    std::vector<cplx> cu(nr * static_cast<std::size_t>(np));
    std::vector<cplx> cd(cu.size());
    signal::ComplexFft fft(np, FFTW_FORWARD);
    for (int comp = 0; comp < 2; ++comp) {
        const auto& src = comp == 0 ? psi0.upper : psi0.lower;
        auto& dst = comp == 0 ? cu : cd;
        for (std::size_t i = 0; i < nr; ++i) {
            for (int j = 0; j < np; ++j) fft.input()[j] = src[grid.index(i, j)];
            fft.execute();
            for (int j = 0; j < np; ++j) dst[grid.index(i, j)] = fft.output()[j] / static_cast<double>(np);
        }
    }
    StateExpansion e;
    e.basis = basis;
    e.coefficients.resize(basis->modes.size());
    for (std::size_t b = 0; b < basis->modes.size(); ++b) {
        const auto& md = basis->modes[b];
        const auto ju = detail::wrap_index(md.m, np);
        const auto jd = detail::wrap_index(md.m + 1, np);
        cplx s = 0.0;
        for (std::size_t i = 0; i < nr; ++i)
            s += grid.radial_weights[i] * grid.radii[i] * (md.upper[i] * cu[i * np + ju] + md.lower[i] * cd[i * np + jd]);
        e.coefficients[b] = 2.0 * std::numbers::pi * s;
        e.captured_norm += std::norm(e.coefficients[b]);
    }
    const double total = field_norm2(psi0);
    if (e.captured_norm < total * (1.0 - norm_tolerance))
        e.warnings.push_back("expand_state: captured norm " + std::to_string(e.captured_norm) + " of " +
                             std::to_string(total) + "; increase the sector range (now m=" +
                             std::to_string(basis->m_min) + ".." + std::to_string(basis->m_max) +
                             ") or the energy cutoff (n_max=" + std::to_string(basis->n_max()) + ")");
    return e;
}

/// Explicit superposition sum_j c_j |mode_j> (coefficients taken as given).
inline StateExpansion superposition(std::shared_ptr<const ModeSet> basis,
                                    const std::vector<std::pair<std::size_t, cplx>>& terms) {
    StateExpansion e;
    e.basis = basis;
    e.coefficients.assign(basis->modes.size(), 0.0);
    for (const auto& [idx, c] : terms) {
        if (idx >= basis->modes.size()) throw qring::parameter_error("superposition: mode index out of range");
        e.coefficients[idx] += c;
    }
    for (const auto& c : e.coefficients) e.captured_norm += std::norm(c);
    return e;
}

/// Psi(tau) on the grid: static modes acquire exp(-i eps tau); Floquet modes
/// carry their own time factor with constant coefficients.
inline SpinorField evolve(const StateExpansion& e, double tau, const PolarGrid& grid) {
    const auto& basis = *e.basis;
    detail::check_grid(grid, basis);
    const int np = grid.n_phi;
    const std::size_t nr = grid.n_r();
    std::vector<cplx> au(nr * static_cast<std::size_t>(np), 0.0);
    std::vector<cplx> ad(au.size(), 0.0);
    for (std::size_t b = 0; b < basis.modes.size(); ++b) {
        if (e.coefficients[b] == cplx(0.0)) continue;
        const auto& md = basis.modes[b];
        const cplx c = e.coefficients[b] * md.phase(tau);
        const auto ju = detail::wrap_index(md.m, np);
        const auto jd = detail::wrap_index(md.m + 1, np);
        for (std::size_t i = 0; i < nr; ++i) {
            au[i * np + ju] += c * md.upper[i];
            ad[i * np + jd] += c * md.lower[i];
        }
    }
    auto f = make_field(grid, tau);
    signal::ComplexFft fft(np, FFTW_BACKWARD);
    for (int comp = 0; comp < 2; ++comp) {
        const auto& src = comp == 0 ? au : ad;
        auto& dst = comp == 0 ? f.upper : f.lower;
        for (std::size_t i = 0; i < nr; ++i) {
            for (int j = 0; j < np; ++j) fft.input()[j] = src[i * np + j];
            fft.execute();
            for (int j = 0; j < np; ++j) dst[grid.index(i, j)] = fft.output()[j];
        }
    }
    return f;
}

struct LocalObservables {
    double density = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    double sz = 0.0;
};

/// S = sigma / 2: <S_x> = Re(conj(a) b), <S_y> = Im(conj(a) b), <S_z> = (|a|^2 - |b|^2) / 2.
inline LocalObservables local_observables(cplx a, cplx b) {
    const cplx ab = std::conj(a) * b;
    return {std::norm(a) + std::norm(b), ab.real(), ab.imag(), 0.5 * (std::norm(a) - std::norm(b))};
}

struct Observables {
    std::vector<double> density;
    std::vector<double> sx;
    std::vector<double> sy;
    std::vector<double> sz;
};

inline Observables observables(const SpinorField& f) {
    Observables o;
    const std::size_t n = f.upper.size();
    o.density.resize(n);
    o.sx.resize(n);
    o.sy.resize(n);
    o.sz.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto l = local_observables(f.upper[i], f.lower[i]);
        o.density[i] = l.density;
        o.sx[i] = l.sx;
        o.sy[i] = l.sy;
        o.sz[i] = l.sz;
    }
    return o;
}

enum class Observable { density, sx, sy, sz };

inline const char* observable_name(Observable o) {
    switch (o) {
    case Observable::sx: return "Sx";
    case Observable::sy: return "Sy";
    case Observable::sz: return "Sz";
    default: return "density";
    }
}

inline Observable parse_observable(const std::string& s) {
    if (s == "density" || s == "rho") return Observable::density;
    if (s == "Sx" || s == "sx") return Observable::sx;
    if (s == "Sy" || s == "sy") return Observable::sy;
    if (s == "Sz" || s == "sz") return Observable::sz;
    throw qring::parameter_error("unknown observable '" + s + "' (density, Sx, Sy, Sz)");
}

inline double select(const LocalObservables& l, Observable o) {
    switch (o) {
    case Observable::sx: return l.sx;
    case Observable::sy: return l.sy;
    case Observable::sz: return l.sz;
    default: return l.density;
    }
}

/// Evaluates Psi(r*, phi*, tau) for many tau with the radial profiles cached.
class ProbeEvaluator {
public:
    ProbeEvaluator(const StateExpansion& e, double r, double phi) : e_(e) {
        if (!e.basis->geometry.contains(r))
            throw qring::domain_error("probe radius " + std::to_string(r) + " lies outside the annulus");
        for (std::size_t b = 0; b < e.basis->modes.size(); ++b) {
            if (e.coefficients[b] == cplx(0.0)) continue;
            const auto& md = e.basis->modes[b];
            const auto [f, g] = md.radial(r);
            terms_.push_back({b, e.coefficients[b] * f * std::polar(1.0, md.m * phi),
                              e.coefficients[b] * g * std::polar(1.0, (md.m + 1) * phi)});
        }
    }

    std::array<cplx, 2> value(double tau) const {
        cplx a = 0.0, b = 0.0;
        for (const auto& t : terms_) {
            const cplx ph = e_.basis->modes[t.index].phase(tau);
            a += t.up * ph;
            b += t.down * ph;
        }
        return {a, b};
    }

    LocalObservables observe(double tau) const {
        const auto v = value(tau);
        return local_observables(v[0], v[1]);
    }

private:
    struct Term {
        std::size_t index;
        cplx up;
        cplx down;
    };
    const StateExpansion& e_;
    std::vector<Term> terms_;
};

inline std::vector<double> uniform_times(double t0, double dt, std::size_t count) {
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i) t[i] = t0 + dt * static_cast<double>(i);
    return t;
}

inline std::vector<double> time_series(const StateExpansion& e, double r, double phi, Observable o,
                                       const std::vector<double>& taus) {
    ProbeEvaluator probe(e, r, phi);
    std::vector<double> out(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) out[i] = select(probe.observe(taus[i]), o);
    return out;
}

/// |<Psi(0)|Psi(tau)>| from coefficients and time factors (orthonormal basis).
inline std::vector<double> autocorrelation(const StateExpansion& e, const std::vector<double>& taus) {
    std::vector<double> out(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        cplx s = 0.0;
        for (std::size_t b = 0; b < e.coefficients.size(); ++b) {
            const double w = std::norm(e.coefficients[b]);
            if (w == 0.0) continue;
            s += w * e.basis->modes[b].phase(taus[i]) * std::conj(e.basis->modes[b].phase(0.0));
        }
        out[i] = std::abs(s);
    }
    return out;
}

struct RevivalEstimate {
    double mean_energy = 0.0;
    double rms_deviation = 0.0;
    double width = 0.0;         // Delta omega = 2 * rms_deviation
    double revival_time = 0.0;  // 2 pi / Delta omega
};

/// T_r = 2 pi / Delta omega with Delta omega twice the |beta|^2-weighted RMS
/// deviation of the mode energies; a two-level state gives its beat period.
inline RevivalEstimate revival_estimate(const StateExpansion& e) {
    double wsum = 0.0, mean = 0.0;
    double emin = std::numeric_limits<double>::infinity(), emax = -emin;
    for (std::size_t b = 0; b < e.coefficients.size(); ++b) {
        const double w = std::norm(e.coefficients[b]);
        if (w == 0.0) continue;
        const double en = e.basis->modes[b].energy;
        wsum += w;
        mean += w * en;
        emin = std::min(emin, en);
        emax = std::max(emax, en);
    }
    if (!(wsum > 0.0) || !(emax - emin > 1e-12 * std::max(1.0, std::abs(emax))))
        throw qring::parameter_error("revival_estimate: expansion has fewer than two distinct frequencies");
    mean /= wsum;
    double var = 0.0;
    for (std::size_t b = 0; b < e.coefficients.size(); ++b) {
        const double w = std::norm(e.coefficients[b]);
        if (w == 0.0) continue;
        const double d = e.basis->modes[b].energy - mean;
        var += w * d * d;
    }
    RevivalEstimate r;
    r.mean_energy = mean;
    r.rms_deviation = std::sqrt(var / wsum);
    r.width = 2.0 * r.rms_deviation;
    r.revival_time = 2.0 * std::numbers::pi / r.width;
    return r;
}

/// Sector weights sum |beta|^2 per m.
inline std::map<int, double> sector_weights(const StateExpansion& e) {
    std::map<int, double> w;
    for (std::size_t b = 0; b < e.coefficients.size(); ++b) w[e.basis->modes[b].m] += std::norm(e.coefficients[b]);
    return w;
}

/// Radially integrated density per azimuth sample.
inline std::vector<double> angular_profile(const SpinorField& f) {
    std::vector<double> p(static_cast<std::size_t>(f.grid.n_phi), 0.0);
    for (std::size_t i = 0; i < f.grid.n_r(); ++i) {
        const double wr = f.grid.radial_weights[i] * f.grid.radii[i];
        for (int j = 0; j < f.grid.n_phi; ++j) {
            const auto k = f.grid.index(i, j);
            p[static_cast<std::size_t>(j)] += wr * (std::norm(f.upper[k]) + std::norm(f.lower[k]));
        }
    }
    return p;
}

/// Number of lobes of a periodic profile: local maxima whose topographic
/// prominence is at least min_prominence * max (the global maximum's
/// prominence is its height above the global minimum).
inline int count_lobes(const std::vector<double>& profile, double min_prominence = 0.25) {
    const std::size_t n = profile.size();
    if (n < 3) return 0;
    const auto [lo_it, hi_it] = std::minmax_element(profile.begin(), profile.end());
    const double peak = *hi_it;
    const double floor = *lo_it;
    if (!(peak > floor)) return 0;
    auto at = [&](long i) { return profile[static_cast<std::size_t>(((i % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n))]; };
    int lobes = 0;
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const double h = at(i);
        // Plateaus count once, at their first sample.
        if (!(h > at(i - 1) && h >= at(i + 1))) continue;
        double prominence = h - floor;
        double left_min = h, right_min = h;
        bool left_higher = false, right_higher = false;
        for (long d = 1; d < static_cast<long>(n); ++d) {
            const double v = at(i - d);
            if (v > h) {
                left_higher = true;
                break;
            }
            left_min = std::min(left_min, v);
        }
        for (long d = 1; d < static_cast<long>(n); ++d) {
            const double v = at(i + d);
            if (v > h) {
                right_higher = true;
                break;
            }
            right_min = std::min(right_min, v);
        }
        if (left_higher || right_higher) prominence = h - std::max(left_higher ? left_min : floor, right_higher ? right_min : floor);
        if (prominence >= min_prominence * peak) ++lobes;
    }
    return lobes;
}

} // namespace qring
