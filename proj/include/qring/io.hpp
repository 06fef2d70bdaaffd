#pragma once

// Run configuration (flat key = value files with overrides), CSV output with
// a one-line JSON metadata header, and a reader that re-validates written files.

#include "qring/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace qring::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest round-trip decimal form, independent of the locale.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

// ---------------------------------------------------------------------------
// Flat key = value configuration

class KeyValueConfig {
public:
    /// Lines "key = value"; '#' starts a comment; blank lines ignored.
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>") {
        KeyValueConfig c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw qring::parameter_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            const auto key = trim(line.substr(0, eq));
            if (key.empty()) throw qring::parameter_error(origin + ":" + std::to_string(lineno) + ": empty key");
            c.values_[key] = trim(line.substr(eq + 1));
        }
        return c;
    }

    static KeyValueConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw qring::parameter_error("cannot read config file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    /// Later layers win.
    void merge(const KeyValueConfig& other) {
        for (const auto& [k, v] : other.values_) values_[k] = v;
    }

    /// "key=value" override.
    void set_assignment(const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || trim(kv.substr(0, eq)).empty())
            throw qring::parameter_error("override '" + kv + "' must have the form key=value");
        values_[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::optional<double> get_double(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        const auto v = parse_number(it->second);
        if (!v) throw qring::parameter_error(key + ": '" + it->second + "' is not a number");
        return v;
    }

    double get_double(const std::string& key, double fallback) const { return get_double(key).value_or(fallback); }

    std::optional<long> get_int(const std::string& key) const {
        const auto v = get_double(key);
        if (!v) return std::nullopt;
        if (*v != std::floor(*v) || std::abs(*v) > 1e15)
            throw qring::parameter_error(key + ": '" + values_.at(key) + "' is not an integer");
        return static_cast<long>(*v);
    }

    long get_int(const std::string& key, long fallback) const { return get_int(key).value_or(fallback); }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const auto& v = it->second;
        if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
        if (v == "false" || v == "no" || v == "0" || v == "off") return false;
        throw qring::parameter_error(key + ": '" + v + "' is not a boolean");
    }

private:
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Validated run configuration

struct ModeTerm {
    int m = 0;
    int n = 1;
    int branch = 1;  // +1 or -1
    std::complex<double> amplitude = 1.0;
};

struct RunConfig {
    std::string mode;  // spectrum | floquet | evolve | fourier | revival | bessel-debug
    double rho = 0.6;
    double soi = 0.0;  // omega / Omega for the static problem
    std::optional<double> A, B, nu;
    int m_min = 0;
    int m_max = 0;
    double eps_max = 0.0;
    double k_max = 0.0;
    int quadrature_order = 64;
    int n_phi_min = 64;
    unsigned threads = 1;
    std::string out_dir = "out";

    std::string basis = "static";  // static | floquet
    std::string state = "gaussian";  // gaussian | modes
    std::vector<ModeTerm> modes;
    double r_center = 0.8, phi_center = 0.0, sigma_r = 0.05, sigma_phi = 0.3;
    double spin_up = 1.0, spin_down = 0.0;

    double t_start = 0.0;
    double dt = 0.01;
    long steps = 1000;
    std::vector<double> snapshots;
    double probe_r = 0.75, probe_phi = 0.0;
    std::string observable = "density";
    std::string average_window = "0";  // time span, or "beat" for the fastest beat period
    std::string window = "flattop";
    double peak_threshold = 0.01;
    int harmonics = 0;
    double norm_floor = 0.999;

    bool sidebands = false;
    int sideband_cutoff = 0;
    int profiles = 0;

    double revival_window = 4.0;
    long revival_samples = 4000;
    std::vector<double> lobe_fractions{0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75};
    double lobe_prominence = 0.25;

    int bessel_order_min = 0;
    int bessel_order_max = 5;
    std::vector<double> bessel_x{0.5, 1.0, 5.0, 25.0};

    bool has_drive() const { return A.has_value() || nu.has_value() || B.has_value(); }
};

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "mode", "rho", "omega_over_Omega", "soi", "A", "B", "nu", "m_min", "m_max", "eps_max", "k_max",
        "quadrature_order", "n_phi_min", "threads", "out", "basis", "state", "modes", "r_center", "phi_center",
        "sigma_r", "sigma_phi", "spin_up", "spin_down", "t_start", "dt", "steps", "t_end", "snapshots", "probe_r",
        "probe_phi", "observable", "average_window", "window", "peak_threshold", "harmonics", "norm_floor",
        "sidebands", "sideband_cutoff", "profiles", "revival_window", "revival_samples", "lobe_fractions",
        "lobe_prominence", "bessel_orders", "bessel_x", "description"};
    return keys;
}

inline std::vector<double> parse_number_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) {
        if (item.empty()) continue;
        const auto v = parse_number(item);
        if (!v) throw qring::parameter_error(key + ": '" + item + "' is not a number");
        out.push_back(*v);
    }
    return out;
}

/// "m,n,branch,re[,im]; ..." with branch '+' or '-'.
inline std::vector<ModeTerm> parse_mode_terms(const std::string& s) {
    std::vector<ModeTerm> out;
    for (const auto& item : split(s, ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ',');
        if (f.size() < 3 || f.size() > 5)
            throw qring::parameter_error("modes: term '" + item + "' must be m,n,branch[,re[,im]]");
        ModeTerm t;
        const auto m = parse_number(f[0]);
        const auto n = parse_number(f[1]);
        if (!m || !n || *m != std::floor(*m) || *n != std::floor(*n) || *n < 1)
            throw qring::parameter_error("modes: term '" + item + "' needs integer m and n >= 1");
        t.m = static_cast<int>(*m);
        t.n = static_cast<int>(*n);
        if (f[2] == "+") {
            t.branch = 1;
        } else if (f[2] == "-") {
            t.branch = -1;
        } else {
            throw qring::parameter_error("modes: branch in '" + item + "' must be + or -");
        }
        double re = 1.0, im = 0.0;
        if (f.size() >= 4) {
            const auto v = parse_number(f[3]);
            if (!v) throw qring::parameter_error("modes: bad amplitude in '" + item + "'");
            re = *v;
        }
        if (f.size() == 5) {
            const auto v = parse_number(f[4]);
            if (!v) throw qring::parameter_error("modes: bad amplitude in '" + item + "'");
            im = *v;
        }
        t.amplitude = {re, im};
        out.push_back(t);
    }
    return out;
}

/// Builds and validates a run configuration; every violated invariant is
/// reported as a parameter_error naming the key.
inline RunConfig make_run_config(const KeyValueConfig& kv, const std::string& mode) {
    for (const auto& [k, v] : kv.values())
        if (!known_keys().count(k)) throw qring::parameter_error("unknown configuration key '" + k + "'");

    RunConfig c;
    c.mode = mode;
    c.rho = kv.get_double("rho", c.rho);
    if (kv.has("omega_over_Omega") && kv.has("soi"))
        throw qring::parameter_error("soi and omega_over_Omega are synonyms; give only one");
    c.soi = kv.has("soi") ? *kv.get_double("soi") : kv.get_double("omega_over_Omega", c.soi);
    c.A = kv.get_double("A");
    c.B = kv.get_double("B");
    c.nu = kv.get_double("nu");
    c.m_min = static_cast<int>(kv.get_int("m_min", c.m_min));
    c.m_max = static_cast<int>(kv.get_int("m_max", c.m_min));
    c.eps_max = kv.get_double("eps_max", c.eps_max);
    c.k_max = kv.get_double("k_max", c.k_max);
    c.quadrature_order = static_cast<int>(kv.get_int("quadrature_order", c.quadrature_order));
    c.n_phi_min = static_cast<int>(kv.get_int("n_phi_min", c.n_phi_min));
    const long threads = kv.get_int("threads", 1);
    c.out_dir = kv.get_string("out", c.out_dir);
    c.basis = kv.get_string("basis", c.basis);
    c.state = kv.get_string("state", c.state);
    if (kv.has("modes")) c.modes = parse_mode_terms(kv.get_string("modes", ""));
    c.r_center = kv.get_double("r_center", c.r_center);
    c.phi_center = kv.get_double("phi_center", c.phi_center);
    c.sigma_r = kv.get_double("sigma_r", c.sigma_r);
    c.sigma_phi = kv.get_double("sigma_phi", c.sigma_phi);
    c.spin_up = kv.get_double("spin_up", c.spin_up);
    c.spin_down = kv.get_double("spin_down", c.spin_down);
    c.t_start = kv.get_double("t_start", c.t_start);
    c.dt = kv.get_double("dt", c.dt);
    c.steps = kv.get_int("steps", c.steps);
    if (kv.has("t_end")) {
        if (kv.has("steps")) throw qring::parameter_error("give either steps or t_end, not both");
        const double t_end = *kv.get_double("t_end");
        if (!(t_end > c.t_start)) throw qring::parameter_error("t_end: must exceed t_start");
        c.steps = std::lround((t_end - c.t_start) / c.dt);
    }
    if (kv.has("snapshots")) c.snapshots = parse_number_list("snapshots", kv.get_string("snapshots", ""));
    c.probe_r = kv.get_double("probe_r", c.probe_r);
    c.probe_phi = kv.get_double("probe_phi", c.probe_phi);
    c.observable = kv.get_string("observable", c.observable);
    c.average_window = kv.get_string("average_window", c.average_window);
    c.window = kv.get_string("window", c.window);
    c.peak_threshold = kv.get_double("peak_threshold", c.peak_threshold);
    c.harmonics = static_cast<int>(kv.get_int("harmonics", c.harmonics));
    c.norm_floor = kv.get_double("norm_floor", c.norm_floor);
    c.sidebands = kv.get_bool("sidebands", c.sidebands);
    c.sideband_cutoff = static_cast<int>(kv.get_int("sideband_cutoff", c.sideband_cutoff));
    c.profiles = static_cast<int>(kv.get_int("profiles", c.profiles));
    c.revival_window = kv.get_double("revival_window", c.revival_window);
    c.revival_samples = kv.get_int("revival_samples", c.revival_samples);
    if (kv.has("lobe_fractions")) c.lobe_fractions = parse_number_list("lobe_fractions", kv.get_string("lobe_fractions", ""));
    c.lobe_prominence = kv.get_double("lobe_prominence", c.lobe_prominence);
    if (kv.has("bessel_orders")) {
        const auto s = kv.get_string("bessel_orders", "");
        const auto dots = s.find("..");
        const auto lo = parse_number(dots == std::string::npos ? s : s.substr(0, dots));
        const auto hi = parse_number(dots == std::string::npos ? s : s.substr(dots + 2));
        if (!lo || !hi || *lo != std::floor(*lo) || *hi != std::floor(*hi))
            throw qring::parameter_error("bessel_orders: expected 'lo..hi' or a single integer");
        c.bessel_order_min = static_cast<int>(*lo);
        c.bessel_order_max = static_cast<int>(*hi);
    }
    if (kv.has("bessel_x")) c.bessel_x = parse_number_list("bessel_x", kv.get_string("bessel_x", ""));

    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw qring::parameter_error(msg);
    };
    require(c.rho > 0.0 && c.rho < 1.0, "rho: must satisfy 0 < rho < 1 (got " + format_number(c.rho) + ")");
    require(std::isfinite(c.soi) && c.soi >= 0.0, "omega_over_Omega: must be finite and >= 0");
    require(threads >= 1 && threads <= 256, "threads: must be in 1..256");
    c.threads = static_cast<unsigned>(threads);
    require(c.quadrature_order >= 8 && c.quadrature_order <= 2048, "quadrature_order: must be in 8..2048");
    require(c.n_phi_min >= 4, "n_phi_min: must be >= 4");
    require(c.peak_threshold > 0.0 && c.peak_threshold < 1.0, "peak_threshold: must lie in (0, 1)");
    require(c.norm_floor > 0.0 && c.norm_floor <= 1.0, "norm_floor: must lie in (0, 1]");
    require(c.lobe_prominence > 0.0 && c.lobe_prominence < 1.0, "lobe_prominence: must lie in (0, 1)");

    const bool needs_sectors = mode == "spectrum" || mode == "floquet" || mode == "evolve" || mode == "fourier" ||
                               mode == "revival";
    if (needs_sectors) require(c.m_max >= c.m_min, "m_min..m_max: sector range is empty");

    const bool floquet_basis = mode == "floquet" || ((mode == "evolve" || mode == "fourier") && c.basis == "floquet");
    if (mode == "evolve" || mode == "fourier")
        require(c.basis == "static" || c.basis == "floquet", "basis: must be static or floquet");
    if (floquet_basis) {
        require(c.nu.has_value(), "nu: required for a Floquet computation");
        require(c.A.has_value(), "A: required for a Floquet computation");
        require(std::isfinite(*c.nu) && *c.nu > 0.0, "nu: must be finite and > 0");
        require(std::isfinite(*c.A) && *c.A >= 0.0, "A: must be finite and >= 0");
        require(!c.B || std::isfinite(*c.B), "B: must be finite");
        require(c.k_max > 0.0, "k_max: must be > 0 for a Floquet basis");
    } else if (needs_sectors) {
        require(c.eps_max > 0.0, "eps_max: must be > 0");
    }
    if (mode == "evolve" || mode == "fourier" || mode == "revival") {
        require(c.state == "gaussian" || c.state == "modes", "state: must be gaussian or modes");
        if (mode == "revival") require(c.state == "gaussian", "state: revival runs start from a Gaussian packet");
        if (c.state == "modes") {
            require(!c.modes.empty(), "modes: an explicit superposition needs at least one term");
            double norm = 0.0;
            for (const auto& t : c.modes) {
                norm += std::norm(t.amplitude);
                require(t.m >= c.m_min && t.m <= c.m_max, "modes: term sector m=" + std::to_string(t.m) + " outside m_min..m_max");
            }
            require(norm > 0.0 && std::isfinite(norm), "modes: amplitudes must have a positive finite norm");
        } else {
            require(c.r_center > c.rho && c.r_center < 1.0, "r_center: must lie strictly inside the annulus");
            require(c.sigma_r > 0.0 && c.sigma_phi > 0.0, "sigma_r, sigma_phi: must be > 0");
            require(std::hypot(c.spin_up, c.spin_down) > 0.0, "spin_up, spin_down: spin vector must be non-zero");
        }
        require(c.dt > 0.0 && std::isfinite(c.dt), "dt: must be > 0");
        require(c.steps >= 1 && c.steps <= 50'000'000, "steps: must be in 1..5e7");
        require(c.probe_r >= c.rho && c.probe_r <= 1.0, "probe_r: must lie in the annulus [rho, 1]");
        require(c.revival_window > 0.0, "revival_window: must be > 0");
        require(c.revival_samples >= 10, "revival_samples: must be >= 10");
        for (double t : c.snapshots) require(std::isfinite(t), "snapshots: times must be finite");
        require(c.harmonics >= 0 && c.harmonics <= 1000, "harmonics: must be in 0..1000");
        if (c.harmonics > 0) require(c.nu.has_value(), "harmonics: need nu as the fundamental");
        if (c.average_window != "beat") {
            const auto w = parse_number(c.average_window);
            require(w && *w >= 0.0, "average_window: must be 'beat' or a non-negative time span");
        }
    }
    if (mode == "bessel-debug") {
        require(c.bessel_order_min <= c.bessel_order_max, "bessel_orders: range is empty");
        require(!c.bessel_x.empty(), "bessel_x: need at least one argument");
        for (double x : c.bessel_x) require(std::isfinite(x) && x >= 0.0, "bessel_x: arguments must be finite and >= 0");
    }
    require(c.sideband_cutoff >= 0, "sideband_cutoff: must be >= 0");
    require(c.profiles >= 0, "profiles: must be >= 0");
    return c;
}

// ---------------------------------------------------------------------------
// CSV output

using Cell = std::variant<double, long long, std::string>;

inline std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") != std::string::npos)
        throw qring::contract_error("CSV text cell '" + s + "' contains a separator");
    return s;
}

/// Table written as "# {metadata json}", a header row and data rows.
class CsvTable {
public:
    CsvTable(std::string kind, std::vector<std::string> columns) : columns_(std::move(columns)) {
        metadata_["kind"] = std::move(kind);
        metadata_["columns"] = columns_;
    }

    json& metadata() { return metadata_; }
    const json& metadata() const { return metadata_; }

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns_.size())
            throw qring::contract_error("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                                        std::to_string(columns_.size()));
        rows_.push_back(std::move(row));
    }

    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string out = "# " + metadata_.dump() + "\n";
        for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
        out += "\n";
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
            out += "\n";
        }
        return out;
    }

    void write(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw qring::parameter_error("cannot write " + path.string());
        out << str();
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
    json metadata_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw qring::parameter_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Reader and validator

struct CsvFile {
    json metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw qring::parameter_error("column '" + name + "' not present");
        return static_cast<std::size_t>(it - columns.begin());
    }

    bool has_column(const std::string& name) const {
        return std::find(columns.begin(), columns.end(), name) != columns.end();
    }

    std::vector<double> numbers(const std::string& name) const {
        const auto j = column_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto v = parse_number(rows[r][j]);
            if (!v) throw qring::parameter_error("row " + std::to_string(r + 1) + ", column " + name + ": not a number");
            out.push_back(*v);
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& name) const {
        const auto j = column_index(name);
        std::vector<std::string> out;
        for (const auto& row : rows) out.push_back(row[j]);
        return out;
    }
};

inline CsvFile parse_csv(const std::string& text) {
    CsvFile f;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw qring::parameter_error("CSV: first line must be '# {metadata}'");
    try {
        f.metadata = json::parse(line.substr(2));
    } catch (const json::exception& e) {
        throw qring::parameter_error(std::string("CSV: metadata is not valid JSON: ") + e.what());
    }
    if (!std::getline(in, line)) throw qring::parameter_error("CSV: missing header row");
    f.columns = split(line, ',');
    if (f.metadata.contains("columns") && f.metadata["columns"].get<std::vector<std::string>>() != f.columns)
        throw qring::parameter_error("CSV: header row disagrees with metadata columns");
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != f.columns.size())
            throw qring::parameter_error("CSV line " + std::to_string(lineno) + ": " + std::to_string(cells.size()) +
                                         " cells, expected " + std::to_string(f.columns.size()));
        f.rows.push_back(std::move(cells));
    }
    return f;
}

inline CsvFile read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qring::parameter_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

/// Re-checks the invariants of a file written by the command-line tool.
/// Returns the list of violations (empty when the file is consistent).
inline std::vector<std::string> validate(const CsvFile& f) {
    std::vector<std::string> problems;
    auto fail = [&](const std::string& s) { problems.push_back(s); };
    if (!f.metadata.contains("kind")) {
        fail("metadata has no 'kind'");
        return problems;
    }
    const std::string kind = f.metadata["kind"];
    auto finite = [&](const std::string& col) {
        const auto v = f.numbers(col);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!std::isfinite(v[i])) {
                fail(col + " is not finite at row " + std::to_string(i + 1));
                break;
            }
        return v;
    };
    try {
        if (kind == "spectrum") {
            const auto m = finite("m");
            const auto n = finite("n");
            const auto e = finite("energy");
            const auto res = finite("boundary_residual");
            const auto br = f.strings("branch");
            const double tol = f.metadata.value("residual_tolerance", 1e-9);
            std::set<std::tuple<long, long, std::string>> seen;
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (!(e[i] >= 0.0)) fail("negative energy at row " + std::to_string(i + 1));
                if (n[i] < 1) fail("n < 1 at row " + std::to_string(i + 1));
                if (br[i] != "+" && br[i] != "-") fail("bad branch at row " + std::to_string(i + 1));
                if (res[i] > tol) fail("boundary residual above tolerance at row " + std::to_string(i + 1));
                if (i > 0 && (m[i] < m[i - 1] || (m[i] == m[i - 1] && e[i] < e[i - 1])))
                    fail("rows not sorted by (m, energy) at row " + std::to_string(i + 1));
                if (!seen.insert({std::lround(m[i]), std::lround(n[i]), br[i]}).second)
                    fail("duplicate (m, n, branch) at row " + std::to_string(i + 1));
            }
        } else if (kind == "floquet") {
            const auto m = finite("m");
            const auto k = finite("k");
            const auto q = finite("quasienergy");
            for (std::size_t i = 0; i < k.size(); ++i) {
                if (!(k[i] > 0.0)) fail("non-positive k at row " + std::to_string(i + 1));
                if (std::abs(q[i] - k[i] * k[i]) > 1e-12 * std::max(1.0, q[i]))
                    fail("quasienergy != k^2 at row " + std::to_string(i + 1));
                if (i > 0 && (m[i] < m[i - 1] || (m[i] == m[i - 1] && k[i] < k[i - 1])))
                    fail("rows not sorted by (m, k) at row " + std::to_string(i + 1));
            }
        } else if (kind == "sidebands") {
            const auto m = finite("m");
            const auto n = finite("n");
            const auto br = f.strings("branch");
            const auto w = finite("weight");
            std::map<std::tuple<long, long, std::string>, double> sums;
            for (std::size_t i = 0; i < w.size(); ++i) sums[{std::lround(m[i]), std::lround(n[i]), br[i]}] += w[i] * w[i];
            for (const auto& [key, s] : sums)
                if (std::abs(s - 1.0) > 1e-9) fail("sideband weights of a mode do not sum to 1 in square");
        } else if (kind == "series" || kind == "autocorrelation" || kind == "averaged_series") {
            const auto t = finite("tau");
            for (std::size_t i = 2; i < t.size(); ++i)
                if (std::abs((t[i] - t[i - 1]) - (t[1] - t[0])) > 1e-9 * std::max(1.0, std::abs(t[i]))) {
                    fail("time grid is not uniform at row " + std::to_string(i + 1));
                    break;
                }
            for (const auto& col : f.columns) {
                if (col == "tau") continue;
                const auto v = finite(col);
                if (col == "density")
                    for (double x : v)
                        if (x < -1e-12) {
                            fail("negative density");
                            break;
                        }
                if (col == "autocorrelation")
                    for (double x : v)
                        if (x < 0.0 || x > 1.0 + 1e-9) {
                            fail("autocorrelation outside [0, 1]");
                            break;
                        }
            }
        } else if (kind == "fourier") {
            const auto w = finite("omega");
            const auto mag = finite("magnitude");
            double mx = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (mag[i] < 0.0 || mag[i] > 1.0) fail("magnitude outside [0, 1] at row " + std::to_string(i + 1));
                mx = std::max(mx, mag[i]);
                if (i > 1 && std::abs((w[i] - w[i - 1]) - (w[1] - w[0])) > 1e-9 * std::max(1.0, w[i])) {
                    fail("frequency grid is not uniform");
                    break;
                }
            }
            if (!w.empty() && mx != 1.0 && mx != 0.0) fail("magnitudes are not normalised to the maximum");
        } else if (kind == "snapshot" || kind == "profiles") {
            const auto d = finite("density");
            const auto sx = finite("Sx");
            const auto sy = finite("Sy");
            const auto sz = finite("Sz");
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double s = std::sqrt(sx[i] * sx[i] + sy[i] * sy[i] + sz[i] * sz[i]);
                if (d[i] < -1e-14 || s > 0.5 * d[i] + 1e-12) {
                    fail("spin density exceeds half the density at row " + std::to_string(i + 1));
                    break;
                }
            }
        } else if (kind == "angular") {
            finite("tau");
            finite("phi");
            for (double x : finite("density"))
                if (x < -1e-14) {
                    fail("negative angular density");
                    break;
                }
        } else if (kind == "bessel") {
            finite("x");
            const auto n = f.numbers("N");
            (void)n;
        } else if (kind == "peaks" || kind == "harmonics" || kind == "revival" || kind == "lobes") {
            for (const auto& col : f.columns)
                if (col != "status") f.numbers(col);
        } else {
            fail("unknown kind '" + kind + "'");
        }
    } catch (const qring::parameter_error& e) {
        fail(e.what());
    }
    return problems;
}

} // namespace qring::io
