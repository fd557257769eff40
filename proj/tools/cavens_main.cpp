// cavens: command-line front end for the cavity/ensemble simulations.
//
// Exit codes: 0 success, 1 configuration error, 2 every grid point failed,
// 3 some grid points failed (tables are still written).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "cavens/config.hpp"
#include "cavens/cumulant.hpp"
#include "cavens/dicke.hpp"
#include "cavens/scenarios.hpp"
#include "cavens/table_io.hpp"

namespace {

using namespace cavens;

enum Exit : int { kOk = 0, kConfig = 1, kAllFailed = 2, kPartial = 3 };

struct Common {
    std::string config;
    std::string out;
    int workers = 0;
    double rel_tol = 0.0;
    double abs_tol = 0.0;
    std::string engine;
    bool quiet = false;
    bool verbose = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
    auto* opt = sub->add_option("--config", c.config, "configuration file (INI, or a .json sidecar)");
    if (config_required) opt->required();
    sub->add_option("--out", c.out, "output directory (env CAVENS_OUTPUT_DIR)");
    sub->add_option("--workers", c.workers, "worker threads, >= 1 (env CAVENS_WORKERS)")->check(CLI::PositiveNumber);
    sub->add_option("--rel-tol", c.rel_tol, "ODE relative tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--abs-tol", c.abs_tol, "ODE absolute tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--engine", c.engine, "exact_tensor | exact_dicke | cumulant")
        ->check(CLI::IsMember({"exact_tensor", "exact_dicke", "cumulant"}));
    auto* q = sub->add_flag("--quiet", c.quiet, "only errors on stderr");
    auto* v = sub->add_flag("--verbose", c.verbose, "per-file and timing information");
    q->excludes(v);
}

// Flags beat environment variables, which beat the configuration file.
void apply_overrides(scenarios::ScenarioSpec& s, const Common& c) {
    if (const char* env = std::getenv("CAVENS_OUTPUT_DIR"); env && *env) s.output_dir = env;
    if (const char* env = std::getenv("CAVENS_WORKERS"); env && *env) {
        try {
            std::size_t used = 0;
            const int w = std::stoi(env, &used);
            if (used != std::string(env).size() || w < 1) throw std::invalid_argument(env);
            s.workers = w;
        } catch (const std::exception&) {
            throw ConfigError(std::string("CAVENS_WORKERS: expected a positive integer, got '") + env + "'");
        }
    }
    if (!c.out.empty()) s.output_dir = c.out;
    if (c.workers > 0) s.workers = c.workers;
    if (c.rel_tol > 0.0) s.rel_tol = c.rel_tol;
    if (c.abs_tol > 0.0) s.abs_tol = c.abs_tol;
    if (!c.engine.empty()) s.engine = scenarios::parse_engine(c.engine);
}

void check_writable(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output directory '" + dir + "' is not writable");
    const auto probe = fs::path(dir) / ".cavens_write_probe";
    try {
        io::write_text_file(probe.string(), "");
    } catch (const ConfigError&) {
        throw ConfigError("output directory '" + dir + "' is not writable");
    }
    fs::remove(probe, ec);
}

int report(const scenarios::ScenarioResult& r, const Common& c) {
    const auto files = scenarios::write_result(r);
    if (!c.quiet) {
        std::cout << scenarios::to_string(r.spec.kind) << ": " << r.points_total << " point(s), "
                  << r.points_failed << " failed, " << r.table.size() << " row(s)\n";
        if (c.verbose) {
            std::cout << "  wall time " << r.wall_seconds << " s, provenance " << r.metadata["provenance_hash"].get<std::string>() << "\n";
            for (const auto& f : files) std::cout << "  wrote " << f << "\n";
        }
    }
    if (r.points_failed > 0) {
        std::size_t shown = 0;
        for (std::size_t i = 0; i < r.table.size() && shown < 5; ++i)
            if (r.table.status[i].rfind("error", 0) == 0) {
                std::cerr << "row " << i << ": " << r.table.status[i] << "\n";
                ++shown;
            }
    }
    if (r.all_failed()) return kAllFailed;
    if (r.points_failed > 0) return kPartial;
    return kOk;
}

void print_params(const SystemParams& p) {
    std::cout << "n_atoms = " << p.n_atoms << "\n"
              << "g = " << io::format_number(p.g) << "\n"
              << "kappa = " << io::format_number(p.kappa) << "\n"
              << "gamma_a = " << io::format_number(p.gamma_a) << "\n"
              << "omega_a = " << io::format_number(p.omega_a) << "\n"
              << "omega_m = " << io::format_number(p.omega_m) << "\n";
    if (p.omega_l) std::cout << "omega_l = " << io::format_number(*p.omega_l) << "\n";
    if (p.detunings)
        std::cout << "delta_m = " << io::format_number(p.detunings->delta_m) << "\n"
                  << "delta_a = " << io::format_number(p.detunings->delta_a) << "\n";
    std::cout << "eta = " << io::format_number(p.eta.real()) << "\n"
              << "eta_im = " << io::format_number(p.eta.imag()) << "\n"
              << "w = " << io::format_number(p.w) << "\n"
              << "temperature = " << io::format_number(p.temperature) << "\n"
              << "nbar = " << io::format_number(p.nbar()) << "\n"
              << "g_eff = " << io::format_number(effective_coupling(p.g, p.n_atoms)) << "\n";
}

int cmd_validate(const Common& c) {
    auto spec = config::load(c.config);
    apply_overrides(spec, c);
    spec.check();
    if (!c.quiet) {
        std::cout << "[scenario]\ntype = " << scenarios::to_string(spec.kind) << "\nname = " << spec.basename()
                  << "\n[system]\n";
        print_params(validated(spec.params));
        std::cout << "[engine]\ntype = " << scenarios::to_string(spec.engine)
                  << "\nworkers = " << spec.workers << "\nrel_tol = " << io::format_number(spec.rel_tol)
                  << "\nabs_tol = " << io::format_number(spec.abs_tol) << "\n";
        if (!spec.axes.empty()) {
            std::cout << "[scan]\n";
            for (const auto& a : spec.axes)
                std::cout << a.variable << " = " << io::format_number(a.min) << " " << io::format_number(a.max) << " "
                          << a.points << (a.log ? " log" : " linear") << "\n";
        }
        std::cout << "# grid points: " << scenarios::grid_points(spec.axes).size() << "\n";
    }
    return kOk;
}

int cmd_run(const Common& c, std::optional<scenarios::ScenarioKind> kind, bool spectra_only) {
    auto spec = config::load(c.config, kind);
    apply_overrides(spec, c);
    if (spectra_only && spec.kind != scenarios::ScenarioKind::thermal_spectrum &&
        spec.kind != scenarios::ScenarioKind::pumped_emission_spectrum &&
        spec.kind != scenarios::ScenarioKind::driven_incoherent_spectrum)
        throw ConfigError("spectrum: scenario '" + scenarios::to_string(spec.kind) + "' is not a spectrum scenario");
    spec.check();
    check_writable(spec.output_dir);
    return report(scenarios::run(spec), c);
}

int cmd_sweep(const Common& c, bool resume) {
    auto specs = config::load_sweep(c.config);
    for (auto& s : specs) {
        apply_overrides(s, c);
        s.check();
        check_writable(s.output_dir);
    }
    int worst = kOk;
    std::size_t failed_specs = 0;
    for (const auto& s : specs) {
        if (resume) {
            // Sweep-level resume: skip a member whose sidecar records the same configuration.
            const auto side = std::filesystem::path(s.output_dir) / (s.basename() + ".json");
            try {
                const auto j = nlohmann::json::parse(io::read_text_file(side.string()));
                if (j.value("provenance_hash", "") == scenarios::provenance_hash(s) && j.value("points_failed", 1) == 0) {
                    if (!c.quiet) std::cout << s.basename() << ": up to date, skipped\n";
                    continue;
                }
            } catch (const std::exception&) {
            }
        }
        const int code = report(scenarios::run(s), c);
        if (code != kOk) {
            ++failed_specs;
            worst = kPartial;
        }
        if (code == kAllFailed && specs.size() == 1) worst = kAllFailed;
    }
    if (failed_specs == specs.size() && specs.size() > 1) worst = kAllFailed;
    return worst;
}

int cmd_steady(const Common& c) {
    auto spec = config::load(c.config, scenarios::ScenarioKind::transmission_scan);
    apply_overrides(spec, c);
    const SystemParams p = validated(spec.params);
    cumulant::SteadyOptions so;
    so.ode.rel_tol = spec.rel_tol;
    so.ode.abs_tol = spec.abs_tol;
    print_params(p);
    std::cout << "# steady state (" << scenarios::to_string(spec.engine) << ")\n";
    try {
        if (spec.engine != scenarios::Engine::cumulant) {
            dicke::HilbertConfig hc;
            hc.basis_mode = spec.engine == scenarios::Engine::exact_dicke ? dicke::BasisMode::dicke_symmetric
                                                                          : dicke::BasisMode::tensor_product;
            hc.n_atoms = static_cast<int>(p.n_atoms);
            hc.fock_cutoff = spec.fock_cutoff;
            hc.dimension_cap = spec.dimension_cap;
            hc = hc.resolved(p);
            hc.check();
            const auto pt = dicke::exact_steady_point(p, hc);
            std::cout << "photons = " << io::format_number(pt.photons) << "\nre_a = " << io::format_number(pt.re_a)
                      << "\nim_a = " << io::format_number(pt.im_a) << "\nsz = " << io::format_number(pt.sz)
                      << "\nstatus = " << pt.status << "\n";
        } else if (p.driven()) {
            const auto st = cumulant::steady_coherent(p, spec.closure, so);
            std::cout << "photons = " << io::format_number(st.state.photons())
                      << "\nre_a = " << io::format_number(st.state.a.real())
                      << "\nim_a = " << io::format_number(st.state.a.imag())
                      << "\nsz = " << io::format_number(st.state.sz)
                      << "\nadasz_c = " << io::format_number(st.state.adasz_c)
                      << "\npath = " << cumulant::to_string(st.info.path) << "\n";
        } else {
            const auto st = cumulant::steady_incoherent(p, so);
            std::cout << "photons = " << io::format_number(st.state.n_ph) << "\nsz = " << io::format_number(st.state.sz)
                      << "\nre_a_sp = " << io::format_number(st.state.a_sp.real())
                      << "\nim_a_sp = " << io::format_number(st.state.a_sp.imag())
                      << "\nspsm = " << io::format_number(st.state.spsm.real())
                      << "\npath = " << cumulant::to_string(st.info.path) << "\n";
        }
    } catch (const NumericalError& e) {
        std::cerr << "steady: " << e.what() << "\n";
        return kAllFailed;
    }
    return kOk;
}

int cmd_list() {
    for (auto k : scenarios::all_scenarios())
        std::cout << scenarios::to_string(k) << "\t" << scenarios::describe(k) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "cavens - thermal microwave cavity coupled to an atomic ensemble\n"
        "Units: rates and frequencies in rad/s, temperatures in kelvin.\n"
        "Exit codes: 0 ok, 1 configuration error, 2 all grid points failed, 3 some failed."};
    app.require_subcommand(1);

    Common common;
    std::string scenario_name;
    bool resume = false;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", scenario_name, "scenario name (see list-scenarios)")->required();
    add_common(run, common);

    auto* sweep = app.add_subcommand("sweep", "run every configuration listed in a sweep file");
    add_common(sweep, common);
    sweep->add_flag("--resume", resume, "skip members whose outputs already match their configuration");

    auto* spectrum = app.add_subcommand("spectrum", "run a spectrum scenario from its configuration");
    add_common(spectrum, common);

    auto* steady = app.add_subcommand("steady", "print the steady state at the configured parameters");
    add_common(steady, common);

    auto* validate = app.add_subcommand("validate", "check a configuration without running or writing");
    add_common(validate, common);

    auto* list = app.add_subcommand("list-scenarios", "list the available scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e, std::cerr, std::cerr);
        std::cerr << app.help();
        return kConfig;
    }

    try {
        if (*list) return cmd_list();
        if (*validate) return cmd_validate(common);
        if (*steady) return cmd_steady(common);
        if (*spectrum) return cmd_run(common, std::nullopt, true);
        if (*sweep) return cmd_sweep(common, resume);
        if (*run) {
            std::optional<scenarios::ScenarioKind> kind;
            try {
                kind = scenarios::parse_scenario(scenario_name);
            } catch (const ConfigError& e) {
                std::cerr << e.what() << "\n" << run->help();
                return kConfig;
            }
            return cmd_run(common, kind, false);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kConfig;
}
