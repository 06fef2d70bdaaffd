#pragma once

// Subcommand implementations of the qring tool. Each writes CSV tables and a
// summary.json into the run's output directory and returns the summary.

#include "qring/dynamics.hpp"
#include "qring/io.hpp"
#include "qring/signal.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qring::cli {

namespace fs = std::filesystem;
using io::Cell;
using io::CsvTable;
using io::json;
using io::RunConfig;

inline json config_echo(const RunConfig& c, const io::KeyValueConfig& kv) {
    // The output location is left out so identical runs give identical files.
    json j = kv.values();
    j.erase("out");
    j["mode"] = c.mode;
    return j;
}

inline std::string branch_text(SpinBranch b) { return std::string(1, branch_symbol(b)); }

inline Drive drive_of(const RunConfig& c) { return Drive(c.A.value_or(0.0), c.B.value_or(0.0), c.nu.value_or(1.0)); }

// ---------------------------------------------------------------------------

inline json run_spectrum(const RunConfig& c, const json& echo, const fs::path& out) {
    const RingGeometry geom(c.rho);
    const auto q = make_quadrature(c.quadrature_order, geom);
    const auto sectors = solve_spectrum(c.m_min, c.m_max, c.eps_max, SOIConstant(c.soi), geom, q, c.threads);

    CsvTable t("spectrum", {"m", "kappa", "n", "branch", "energy", "k_plus", "k_minus", "radial_polarization",
                            "upper_weight", "boundary_residual", "norm_deviation", "degenerate"});
    CsvTable prof("profiles", {"m", "n", "branch", "r", "F", "G", "density", "Sx", "Sy", "Sz"});
    json warnings = json::array();
    long mismatches = 0;
    for (const auto& s : sectors) {
        for (const auto& w : s.warnings) warnings.push_back(w);
        mismatches += static_cast<long>(s.node_mismatches.size());
        int profiled = 0;
        for (const auto& md : s.modes) {
            t.add_row({static_cast<long long>(md.m), md.kappa(), static_cast<long long>(md.n), branch_text(md.branch),
                       md.energy, md.k_plus, md.k_minus, md.radial_polarization, md.upper_weight, md.boundary_residual,
                       md.norm_deviation, static_cast<long long>(md.degenerate)});
            if (profiled++ >= c.profiles) continue;
            const int samples = 200;
            for (int i = 0; i <= samples; ++i) {
                const double r = geom.inner() + geom.width() * i / samples;
                const auto [f, g] = md.radial(r);
                const auto l = local_observables(f, g);
                prof.add_row({static_cast<long long>(md.m), static_cast<long long>(md.n), branch_text(md.branch), r, f,
                              g, l.density, l.sx, l.sy, l.sz});
            }
        }
    }
    const int degeneracy = c.soi == 0.0 ? 2 : 1;
    for (auto* tab : {&t, &prof}) {
        tab->metadata()["config"] = echo;
        tab->metadata()["spin_degeneracy"] = degeneracy;
    }
    t.metadata()["residual_tolerance"] = 1e-9;
    t.write(out / "spectrum.csv");
    if (c.profiles > 0) prof.write(out / "profiles.csv");
    return {{"levels", t.rows()}, {"spin_degeneracy", degeneracy}, {"node_mismatches", mismatches}, {"warnings", warnings}};
}

// ---------------------------------------------------------------------------

inline json run_floquet(const RunConfig& c, const json& echo, const fs::path& out) {
    const RingGeometry geom(c.rho);
    const auto q = make_quadrature(c.quadrature_order, geom);
    const Drive drive = drive_of(c);
    CsvTable t("floquet", {"m", "kappa", "n", "branch", "family", "k", "quasienergy", "reduced_quasienergy",
                           "floquet_exponent", "partner_m", "fm_index", "boundary_residual", "null_residual_plus",
                           "null_residual_minus"});
    CsvTable sb("sidebands", {"m", "n", "branch", "alpha", "harmonic", "weight"});
    json warnings = json::array();
    for (int m = c.m_min; m <= c.m_max; ++m) {
        const auto s = scan_floquet_spectrum(m, c.k_max, drive, geom, q);
        for (const auto& w : s.warnings) warnings.push_back(w);
        for (const auto& md : s.modes) {
            const double z = drive.amplitude() * md.k / drive.nu();
            t.add_row({static_cast<long long>(md.m), md.kappa(), static_cast<long long>(md.n), branch_text(md.branch),
                       std::string(family_name(md.family)), md.k, md.quasienergy(), md.reduced_quasienergy(),
                       md.floquet_exponent(), static_cast<long long>(partner_sector(md)), z, md.boundary_residual,
                       md.null_residual_plus, md.null_residual_minus});
            if (!c.sidebands) continue;
            const int cutoff = c.sideband_cutoff > 0 ? c.sideband_cutoff : specfun::recommended_cutoff(z);
            const auto w = sideband_weights(md, cutoff);
            // exp(-i s z sin(nu t)) = sum_a J_a(z) exp(-i s a nu t): harmonic -s a.
            for (int a = -cutoff; a <= cutoff; ++a)
                sb.add_row({static_cast<long long>(md.m), static_cast<long long>(md.n), branch_text(md.branch),
                            static_cast<long long>(a), static_cast<long long>(-branch_sign(md.branch) * a), w(a)});
        }
    }
    for (auto* tab : {&t, &sb}) tab->metadata()["config"] = echo;
    t.write(out / "floquet.csv");
    if (c.sidebands) sb.write(out / "sidebands.csv");
    return {{"modes", t.rows()}, {"sideband_rows", sb.rows()}, {"warnings", warnings}};
}

// ---------------------------------------------------------------------------
// Shared state preparation for evolve / fourier / revival

struct PreparedState {
    std::shared_ptr<const ModeSet> basis;
    PolarGrid grid;
    StateExpansion expansion;
    json warnings = json::array();
};

inline PreparedState prepare_state(const RunConfig& c) {
    const RingGeometry geom(c.rho);
    const auto q = make_quadrature(c.quadrature_order, geom);
    PreparedState p;
    if (c.mode != "revival" && c.basis == "floquet")
        p.basis = make_floquet_basis(c.m_min, c.m_max, c.k_max, drive_of(c), geom, q);
    else
        p.basis = make_static_basis(c.m_min, c.m_max, c.eps_max, SOIConstant(c.soi), geom, q, c.threads);
    for (const auto& w : p.basis->warnings) p.warnings.push_back(w);
    if (p.basis->modes.empty()) throw qring::truncation_error("basis is empty; raise eps_max or k_max");
    p.grid = make_polar_grid(q, p.basis->max_abs_order(), c.n_phi_min);

    if (c.state == "modes") {
        std::vector<std::pair<std::size_t, cplx>> terms;
        double norm = 0.0;
        for (const auto& t : c.modes) norm += std::norm(t.amplitude);
        for (const auto& t : c.modes)
            terms.emplace_back(p.basis->require(t.m, t.n, t.branch > 0 ? SpinBranch::plus : SpinBranch::minus),
                               t.amplitude / std::sqrt(norm));
        p.expansion = superposition(p.basis, terms);
    } else {
        std::vector<std::string> pw;
        PacketSpec spec;
        spec.r_center = c.r_center;
        spec.phi_center = c.phi_center;
        spec.sigma_r = c.sigma_r;
        spec.sigma_phi = c.sigma_phi;
        spec.spin_up = c.spin_up;
        spec.spin_down = c.spin_down;
        const auto psi0 = gaussian_packet(spec, geom, p.grid, &pw);
        for (const auto& w : pw) p.warnings.push_back(w);
        p.expansion = expand_state(psi0, p.basis, 1.0 - c.norm_floor);
        if (p.expansion.captured_norm < c.norm_floor)
            throw qring::truncation_error("captured norm " + io::format_number(p.expansion.captured_norm) +
                                          " below norm_floor " + io::format_number(c.norm_floor) +
                                          "; raise eps_max/k_max or widen m_min..m_max");
        // Observables refer to the normalised captured state.
        for (auto& v : p.expansion.coefficients) v /= std::sqrt(p.expansion.captured_norm);
    }
    for (const auto& w : p.expansion.warnings) p.warnings.push_back(w);
    return p;
}

/// Upper edge of the density spectrum: pairwise energy differences plus the
/// Carson bandwidth of the frequency-modulated phases.
inline double predicted_bandwidth(const StateExpansion& e) {
    double emin = std::numeric_limits<double>::infinity(), emax = -emin, fm = 0.0, shift = 0.0;
    for (std::size_t b = 0; b < e.coefficients.size(); ++b) {
        if (std::norm(e.coefficients[b]) < 1e-14) continue;
        const auto& md = e.basis->modes[b];
        emin = std::min(emin, md.energy);
        emax = std::max(emax, md.energy);
        fm = std::max(fm, md.fm_index * md.nu);
        shift = std::max(shift, std::abs(md.shift_rate));
    }
    return (emax - emin) + 2.0 * fm + 2.0 * shift;
}

/// Period of the fastest beat between populated modes.
inline double beat_period(const StateExpansion& e) {
    double emin = std::numeric_limits<double>::infinity(), emax = -emin;
    for (std::size_t b = 0; b < e.coefficients.size(); ++b) {
        if (std::norm(e.coefficients[b]) < 1e-14) continue;
        emin = std::min(emin, e.basis->modes[b].energy);
        emax = std::max(emax, e.basis->modes[b].energy);
    }
    if (!(emax > emin)) throw qring::parameter_error("average_window: 'beat' needs at least two distinct energies");
    return 2.0 * std::numbers::pi / (emax - emin);
}

inline void check_sampling(const RunConfig& c, const StateExpansion& e) {
    const double w = predicted_bandwidth(e);
    if (w * c.dt >= std::numbers::pi)
        throw qring::sampling_error("dt=" + io::format_number(c.dt) + " undersamples the predicted bandwidth " +
                                    io::format_number(w) + " (need dt < " + io::format_number(std::numbers::pi / w) + ")");
}

inline CsvTable probe_series_table(const RunConfig& c, const StateExpansion& e, const std::vector<double>& taus,
                                   const json& echo) {
    CsvTable t("series", {"tau", "density", "Sx", "Sy", "Sz"});
    t.metadata()["config"] = echo;
    t.metadata()["probe"] = {{"r", c.probe_r}, {"phi", c.probe_phi}};
    const ProbeEvaluator probe(e, c.probe_r, c.probe_phi);
    for (double tau : taus) {
        const auto l = probe.observe(tau);
        t.add_row({tau, l.density, l.sx, l.sy, l.sz});
    }
    return t;
}

inline std::vector<double> column_of(const RunConfig& c, const StateExpansion& e, const std::vector<double>& taus) {
    return time_series(e, c.probe_r, c.probe_phi, parse_observable(c.observable), taus);
}

inline void write_snapshots(const RunConfig& c, const PreparedState& p, const json& echo, const fs::path& out) {
    for (std::size_t s = 0; s < c.snapshots.size(); ++s) {
        const auto f = evolve(p.expansion, c.snapshots[s], p.grid);
        const auto o = observables(f);
        CsvTable t("snapshot", {"r", "phi", "density", "Sx", "Sy", "Sz"});
        t.metadata()["config"] = echo;
        t.metadata()["tau"] = c.snapshots[s];
        for (std::size_t i = 0; i < p.grid.n_r(); ++i)
            for (int j = 0; j < p.grid.n_phi; ++j) {
                const auto k = p.grid.index(i, j);
                t.add_row({p.grid.radii[i], p.grid.phi(j), o.density[k], o.sx[k], o.sy[k], o.sz[k]});
            }
        t.write(out / ("snapshot_" + std::to_string(s) + ".csv"));
    }
}

inline json run_evolve(const RunConfig& c, const json& echo, const fs::path& out) {
    const auto p = prepare_state(c);
    check_sampling(c, p.expansion);
    const auto taus = uniform_times(c.t_start, c.dt, static_cast<std::size_t>(c.steps) + 1);
    probe_series_table(c, p.expansion, taus, echo).write(out / "series.csv");

    json summary{{"basis_modes", p.basis->modes.size()}, {"captured_norm", p.expansion.captured_norm},
                 {"predicted_bandwidth", predicted_bandwidth(p.expansion)}};

    auto series = column_of(c, p.expansion, taus);
    double window = 0.0;
    if (c.average_window == "beat")
        window = beat_period(p.expansion);
    else
        window = *io::parse_number(c.average_window);
    if (window > 0.0) {
        series = signal::moving_average(series, c.dt, window);
        CsvTable a("averaged_series", {"tau", c.observable});
        a.metadata()["config"] = echo;
        a.metadata()["window"] = window;
        for (std::size_t i = 0; i < taus.size(); ++i) a.add_row({taus[i], series[i]});
        a.write(out / "averaged_series.csv");
        summary["average_window"] = window;
    }
    if (c.harmonics > 0) {
        // Whole periods of the drive only.
        const double T = 2.0 * std::numbers::pi / *c.nu;
        const auto per = static_cast<std::size_t>(std::floor(static_cast<double>(series.size()) * c.dt / T + 1e-9));
        const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(per) * T / c.dt));
        if (per < 1 || std::abs(static_cast<double>(n) * c.dt - static_cast<double>(per) * T) > 1e-6 * T)
            throw qring::parameter_error("harmonics: the series must cover a whole number of drive periods; choose dt dividing 2 pi / nu");
        const std::vector<double> head(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(n));
        const auto hc = signal::harmonic_content(head, c.dt, *c.nu, c.harmonics);
        CsvTable h("harmonics", {"harmonic", "omega", "power_fraction"});
        h.metadata()["config"] = echo;
        h.metadata()["ac_power"] = hc.ac_power;
        int above = 0;
        for (int i = 1; i <= c.harmonics; ++i) {
            h.add_row({static_cast<long long>(i), i * *c.nu, hc.power_fraction[static_cast<std::size_t>(i - 1)]});
            above += hc.power_fraction[static_cast<std::size_t>(i - 1)] > c.peak_threshold;
        }
        h.write(out / "harmonics.csv");
        summary["harmonics_above_threshold"] = above;
    }
    if (c.state == "gaussian") {
        CsvTable a("autocorrelation", {"tau", "autocorrelation"});
        a.metadata()["config"] = echo;
        const auto ac = autocorrelation(p.expansion, taus);
        for (std::size_t i = 0; i < taus.size(); ++i) a.add_row({taus[i], ac[i]});
        a.write(out / "autocorrelation.csv");
    }
    write_snapshots(c, p, echo, out);
    summary["warnings"] = p.warnings;
    return summary;
}

// ---------------------------------------------------------------------------

inline json run_fourier(const RunConfig& c, const json& echo, const fs::path& out) {
    const auto p = prepare_state(c);
    check_sampling(c, p.expansion);
    const auto taus = uniform_times(c.t_start, c.dt, static_cast<std::size_t>(c.steps));
    probe_series_table(c, p.expansion, taus, echo).write(out / "series.csv");
    const auto series = column_of(c, p.expansion, taus);
    const auto spec = signal::fourier_spectrum(series, c.dt,
                                               {.window = signal::parse_window(c.window),
                                                .remove_mean = true,
                                                .predicted_max_frequency = predicted_bandwidth(p.expansion)});
    CsvTable f("fourier", {"omega", "amplitude", "magnitude"});
    CsvTable pk("peaks", {"omega", "amplitude", "magnitude", "omega_over_nu"});
    for (auto* t : {&f, &pk}) {
        t->metadata()["config"] = echo;
        t->metadata()["window"] = signal::window_name(spec.window);
        t->metadata()["bin_width"] = spec.bin_width();
    }
    for (std::size_t k = 0; k < spec.frequencies.size(); ++k)
        f.add_row({spec.frequencies[k], spec.amplitudes[k], spec.magnitudes[k]});
    const double nu = c.nu.value_or(0.0);
    for (auto k : signal::find_peaks(spec, c.peak_threshold))
        pk.add_row({spec.frequencies[k], spec.amplitudes[k], spec.magnitudes[k],
                    nu > 0.0 ? spec.frequencies[k] / nu : std::nan("")});
    f.write(out / "fourier.csv");
    pk.write(out / "peaks.csv");
    return {{"basis_modes", p.basis->modes.size()}, {"peaks", pk.rows()}, {"bin_width", spec.bin_width()},
            {"warnings", p.warnings}};
}

// ---------------------------------------------------------------------------

inline json run_revival(const RunConfig& c, const json& echo, const fs::path& out) {
    const auto p = prepare_state(c);
    const auto rv = revival_estimate(p.expansion);
    const double span = c.revival_window * rv.revival_time;
    const auto n = static_cast<std::size_t>(c.revival_samples);
    const auto taus = uniform_times(0.0, span / static_cast<double>(n), n + 1);
    const auto ac = autocorrelation(p.expansion, taus);

    constexpr double kCollapseLevel = 0.2;
    std::size_t collapse = 0;
    for (std::size_t i = 1; i < ac.size() && !collapse; ++i)
        if (ac[i] < kCollapseLevel) collapse = i;
    std::size_t best = 0;
    if (collapse)
        for (std::size_t i = collapse; i < ac.size(); ++i)
            if (ac[i] > ac[best] || best == 0) best = i;

    CsvTable a("autocorrelation", {"tau", "autocorrelation"});
    a.metadata()["config"] = echo;
    for (std::size_t i = 0; i < taus.size(); ++i) a.add_row({taus[i], ac[i]});
    a.write(out / "autocorrelation.csv");

    CsvTable r("revival", {"mean_energy", "rms_deviation", "width", "revival_time", "captured_norm", "collapse_time",
                           "revival_peak_time", "revival_peak_value"});
    r.metadata()["config"] = echo;
    r.metadata()["collapse_level"] = kCollapseLevel;
    r.add_row({rv.mean_energy, rv.rms_deviation, rv.width, rv.revival_time, p.expansion.captured_norm,
               collapse ? taus[collapse] : std::nan(""), best ? taus[best] : std::nan(""), best ? ac[best] : std::nan("")});
    r.write(out / "revival.csv");

    // Angular profiles at fractions of the observed revival time (or T_r when
    // no revival was found).
    const double t_ref = best ? taus[best] : rv.revival_time;
    CsvTable l("lobes", {"fraction", "tau", "lobes"});
    CsvTable ang("angular", {"tau", "phi", "density"});
    for (auto* t : {&l, &ang}) {
        t->metadata()["config"] = echo;
        t->metadata()["reference_time"] = t_ref;
    }
    for (double f : c.lobe_fractions) {
        const double tau = f * t_ref;
        const auto prof = angular_profile(evolve(p.expansion, tau, p.grid));
        l.add_row({f, tau, static_cast<long long>(count_lobes(prof, c.lobe_prominence))});
        for (int j = 0; j < p.grid.n_phi; ++j) ang.add_row({tau, p.grid.phi(j), prof[static_cast<std::size_t>(j)]});
    }
    l.write(out / "lobes.csv");
    ang.write(out / "angular.csv");
    write_snapshots(c, p, echo, out);
    return {{"basis_modes", p.basis->modes.size()}, {"captured_norm", p.expansion.captured_norm},
            {"revival_time_estimate", rv.revival_time}, {"collapse_time", collapse ? json(taus[collapse]) : json()},
            {"revival_peak", best ? json(ac[best]) : json()}, {"warnings", p.warnings}};
}

// ---------------------------------------------------------------------------

inline json run_bessel_debug(const RunConfig& c, const json& echo, const fs::path& out) {
    CsvTable t("bessel", {"N", "x", "J", "Y", "wronskian_residual"});
    t.metadata()["config"] = echo;
    for (int order = c.bessel_order_min; order <= c.bessel_order_max; ++order)
        for (double x : c.bessel_x) {
            const double j = specfun::bessel_j(order, x);
            double y = std::nan(""), wr = std::nan("");
            if (x > 0.0) {
                y = specfun::bessel_n(order, x);
                // J_{N+1} Y_N - J_N Y_{N+1} = 2 / (pi x)
                const double w = specfun::bessel_j(order + 1, x) * y - j * specfun::bessel_n(order + 1, x);
                wr = std::abs(w * std::numbers::pi * x / 2.0 - 1.0);
            }
            t.add_row({static_cast<long long>(order), x, j, y, wr});
        }
    t.write(out / "bessel.csv");
    return {{"rows", t.rows()}};
}

} // namespace qring::cli
