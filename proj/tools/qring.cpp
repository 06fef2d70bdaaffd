#include "commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

#ifndef QRING_PRESET_DIR
#define QRING_PRESET_DIR "presets"
#endif

namespace {

using namespace qring;
using io::json;

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3 };

int report(int code, const std::string& type, const std::string& message) {
    json j{{"error", code == kValidation ? "validation" : "numerical"}, {"type", type}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return code;
}

struct CommonOptions {
    std::string config;
    std::string preset;
    std::string out;
    std::vector<std::string> assignments;
    std::map<std::string, std::string> flags;
    long threads = 0;
};

void add_common(CLI::App* app, CommonOptions& o, bool dynamics) {
    app->add_option("--config", o.config, "key = value configuration file");
    app->add_option("--preset", o.preset, "named preset (e.g. fig2a) from the preset directory");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--threads", o.threads, "worker threads for sector scans")->check(CLI::Range(1, 256));
    app->add_option("--set", o.assignments, "override key=value (repeatable)");
    const std::vector<std::pair<std::string, std::string>> dedicated{
        {"--rho", "rho"},     {"--soi", "omega_over_Omega"}, {"--A", "A"},           {"--B", "B"},
        {"--nu", "nu"},       {"--m-min", "m_min"},          {"--m-max", "m_max"},   {"--eps-max", "eps_max"},
        {"--k-max", "k_max"}};
    for (const auto& [flag, key] : dedicated) {
        const std::string k = key;
        app->add_option_function<std::string>(flag, [&o, k](const std::string& v) { o.flags[k] = v; }, "sets " + key);
    }
    if (dynamics) {
        for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
                 {"--dt", "dt"}, {"--steps", "steps"}, {"--observable", "observable"}}) {
            const std::string k = key;
            app->add_option_function<std::string>(flag, [&o, k](const std::string& v) { o.flags[k] = v; }, "sets " + key);
        }
    }
}

io::KeyValueConfig layered_config(const CommonOptions& o) {
    io::KeyValueConfig kv;
    if (!o.preset.empty()) {
        const auto path = std::filesystem::path(QRING_PRESET_DIR) / (o.preset + ".cfg");
        if (!std::filesystem::exists(path)) throw parameter_error("unknown preset '" + o.preset + "'");
        kv.merge(io::KeyValueConfig::load(path));
    }
    if (!o.config.empty()) kv.merge(io::KeyValueConfig::load(o.config));
    for (const auto& a : o.assignments) kv.set_assignment(a);
    for (const auto& [k, v] : o.flags) {
        // A dedicated flag replaces either spelling of the SOI key.
        if (k == "omega_over_Omega" && kv.has("soi")) kv.set("soi", v);
        else kv.set(k, v);
    }
    if (o.threads > 0) kv.set("threads", std::to_string(o.threads));
    if (!o.out.empty()) kv.set("out", o.out);
    // The preset's own mode key only names its intended subcommand.
    io::KeyValueConfig cleaned;
    for (const auto& [k, v] : kv.values())
        if (k != "mode") cleaned.set(k, v);
    return cleaned;
}

using Runner = std::function<json(const io::RunConfig&, const json&, const std::filesystem::path&)>;

int run_command(const std::string& mode, const CommonOptions& o, const Runner& runner) {
    const auto kv = layered_config(o);
    const auto cfg = io::make_run_config(kv, mode);
    const json echo = cli::config_echo(cfg, kv);
    const std::filesystem::path out = cfg.out_dir;
    std::filesystem::create_directories(out);
    json summary{{"mode", mode}, {"config", echo}, {"results", runner(cfg, echo, out)}};
    io::write_json(out / "summary.json", summary);
    std::cout << summary["results"].dump() << "\n";
    return kOk;
}

int run_validate(const std::vector<std::string>& files) {
    bool ok = true;
    for (const auto& f : files) {
        const auto csv = io::read_csv(f);
        const auto problems = io::validate(csv);
        ok = ok && problems.empty();
        std::cout << json{{"file", f}, {"kind", csv.metadata.value("kind", "")}, {"rows", csv.rows.size()},
                          {"problems", problems}}
                         .dump()
                  << "\n";
    }
    if (!ok) return report(kValidation, "invalid_file", "one or more files failed validation");
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectra, Floquet states and wave-packet dynamics of a Rashba quantum ring"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        bool dynamics;
        Runner runner;
    };
    const std::vector<Sub> subs{
        {"spectrum", "static eigenenergies and labels", false, cli::run_spectrum},
        {"floquet", "Floquet wavenumbers, quasienergies and sideband weights", false, cli::run_floquet},
        {"evolve", "time series at a probe point, averages, snapshots", true, cli::run_evolve},
        {"fourier", "spectrum of a probe time series", true, cli::run_fourier},
        {"revival", "autocorrelation, collapse and revival of a packet", true, cli::run_revival},
        {"bessel-debug", "tabulate J_N and Y_N", false, cli::run_bessel_debug},
    };
    std::vector<CommonOptions> opts(subs.size());
    std::vector<CLI::App*> apps;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        auto* sub = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(sub, opts[i], subs[i].dynamics);
        apps.push_back(sub);
    }
    std::vector<std::string> files;
    auto* validate = app.add_subcommand("validate", "re-read output CSV files and check their invariants");
    validate->add_option("files", files, "CSV files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(kValidation, "usage", e.what());
    }

    try {
        if (validate->parsed()) return run_validate(files);
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (apps[i]->parsed()) return run_command(subs[i].name, opts[i], subs[i].runner);
    } catch (const qring::parameter_error& e) {
        return report(kValidation, "parameter_error", e.what());
    } catch (const qring::domain_error& e) {
        return report(kValidation, "domain_error", e.what());
    } catch (const qring::sampling_error& e) {
        return report(kNumerical, "sampling_error", e.what());
    } catch (const qring::truncation_error& e) {
        return report(kNumerical, "truncation_error", e.what());
    } catch (const qring::consistency_error& e) {
        return report(kNumerical, "consistency_error", e.what());
    } catch (const qring::contract_error& e) {
        return report(kNumerical, "contract_error", e.what());
    } catch (const std::exception& e) {
        return report(kNumerical, "error", e.what());
    }
    return kOk;
}
