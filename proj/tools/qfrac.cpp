// qfrac: exact-diagonalization transport runs on fractal lattices.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical
// failure, 4 resource-guard refusal.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qfrac/analysis.hpp"
#include "qfrac/ctrw.hpp"
#include "qfrac/dynamics.hpp"
#include "qfrac/errors.hpp"
#include "qfrac/experiment.hpp"
#include "qfrac/hamiltonian.hpp"
#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

namespace {

namespace qx = qfrac::experiment;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitResource = 4;

// QFRAC_THREADS caps the BLAS/OpenMP thread pools; it must be exported
// before the first LAPACK call, hence first thing in main.
void apply_thread_override() {
    const char* v = std::getenv("QFRAC_THREADS");
    if (v == nullptr || *v == '\0') return;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) {
        std::cerr << "qfrac: ignoring QFRAC_THREADS='" << v << "' (want a positive integer)\n";
        return;
    }
    setenv("OPENBLAS_NUM_THREADS", v, 1);
    setenv("OMP_NUM_THREADS", v, 1);
}

void write_text(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw qfrac::ConfigError("output", "cannot write '" + path + "'");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) throw qfrac::ConfigError("output", "short write to '" + path + "'");
}

// Shared --kind/--generation/--side/--gamma block. Values flow through
// apply_override so the CLI and config files validate identically.
struct LatticeOpts {
    std::string kind = "gasket";
    std::string generation = "4";
    std::string side = "16";
    std::string gamma = "1";
};

void add_lattice_opts(CLI::App* cmd, LatticeOpts& o) {
    cmd->add_option("--kind", o.kind, "gasket | carpet | triangular | square | interpolating")
        ->capture_default_str();
    cmd->add_option("--generation", o.generation, "fractal generation")->capture_default_str();
    cmd->add_option("--side", o.side, "vertices per edge (triangular/square)")
        ->capture_default_str();
    cmd->add_option("--gamma", o.gamma, "complement coupling ratio (interpolating)")
        ->capture_default_str();
}

qx::LatticeSpec to_spec(const LatticeOpts& o) {
    qx::ExperimentConfig tmp;
    qx::apply_override(tmp, "lattice.kind", o.kind);
    qx::apply_override(tmp, "lattice.generation", o.generation);
    qx::apply_override(tmp, "lattice.side", o.side);
    qx::apply_override(tmp, "lattice.gamma", o.gamma);
    return tmp.lattice;
}

// One CLI flag bound to one config key; applied only when the user set it.
struct ConfigFlag {
    CLI::Option* opt = nullptr;
    std::string key;
    std::string value;
};

void apply_flags(qx::ExperimentConfig& cfg, const std::vector<ConfigFlag>& flags) {
    for (const ConfigFlag& f : flags)
        if (f.opt->count() > 0) qx::apply_override(cfg, f.key, f.value);
}

void apply_sets(qx::ExperimentConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw qfrac::ConfigError("--set", "expected key=value, got '" + kv + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        qx::apply_override(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
}

void report_files(const qx::RunResult& result) {
    for (const std::string& f : result.files) std::cout << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_override();

    CLI::App app{"single-particle quantum transport on fractal lattices"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "build a lattice and export sites/edges");
    LatticeOpts gen_lat;
    std::string gen_output = "-";
    add_lattice_opts(generate, gen_lat);
    generate->add_option("--output", gen_output, "output file, - for stdout")
        ->capture_default_str();
    generate->callback([&] {
        const qfrac::lattice::LatticeGraph lat = qx::build(to_spec(gen_lat));
        std::ostringstream body;
        qfrac::lattice::export_lattice(body, lat);
        write_text(gen_output, body.str());
    });

    // spectrum ---------------------------------------------------------
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the quantum or CTRW operator");
    LatticeOpts sp_lat;
    std::string sp_operator = "quantum";
    std::string sp_output = "-";
    add_lattice_opts(spectrum, sp_lat);
    spectrum->add_option("--operator", sp_operator, "quantum | ctrw")->capture_default_str();
    spectrum->add_option("--output", sp_output, "output file, - for stdout")
        ->capture_default_str();
    spectrum->callback([&] {
        const qx::LatticeSpec spec = to_spec(sp_lat);
        qx::check_resource_guard(spec);
        const qfrac::lattice::LatticeGraph lat = qx::build(spec);
        std::vector<double> evals;
        if (sp_operator == "quantum") {
            evals = qfrac::spectral::eigenvalues_only(
                qfrac::hamiltonian::assemble_quantum(lat, {1.0, spec.gamma}));
        } else if (sp_operator == "ctrw") {
            evals =
                qfrac::spectral::eigenvalues_only(qfrac::hamiltonian::assemble_ctrw_generator(lat));
        } else {
            throw qfrac::ConfigError("--operator", "expected quantum or ctrw");
        }
        std::ostringstream body;
        body << "# qfrac spectrum\n";
        body << "# lattice = " << qx::describe(spec) << "\n";
        body << "# operator = " << sp_operator << "\n";
        qfrac::spectral::write_spectrum(body, evals);
        write_text(sp_output, body.str());
    });

    // evolve / ctrw / levelspacing: thin frontends over run_experiment --
    struct RunCmdState {
        LatticeOpts lat;
        std::vector<ConfigFlag> flags;
        std::vector<std::string> sets;
    };

    auto add_run_flags = [](CLI::App* cmd, RunCmdState& st,
                            std::initializer_list<std::pair<const char*, const char*>> specs) {
        // CLI11 keeps a reference to each value string: reserve up front so
        // later push_backs cannot reallocate under it.
        st.flags.reserve(specs.size());
        for (const auto& [flag, key] : specs) {
            st.flags.push_back({nullptr, key, {}});
            ConfigFlag& f = st.flags.back();
            f.opt = cmd->add_option(flag, f.value, key);
        }
    };

    auto run_from_flags = [](const RunCmdState& st,
                             std::vector<std::string> default_observables) {
        qx::ExperimentConfig cfg;
        cfg.lattice = to_spec(st.lat);
        cfg.observables = std::move(default_observables);
        apply_flags(cfg, st.flags);
        apply_sets(cfg, st.sets);
        report_files(qx::run_experiment(cfg));
    };

    auto* evolve = app.add_subcommand("evolve", "evolve an initial state and export observables");
    auto ev_state = std::make_shared<RunCmdState>();
    add_lattice_opts(evolve, ev_state->lat);
    add_run_flags(evolve, *ev_state,
                  {{"--name", "name"},
                   {"--initial", "initial.kind"},
                   {"--site", "initial.site"},
                   {"--tmin", "time.min"},
                   {"--tmax", "time.max"},
                   {"--points", "time.points"},
                   {"--observables", "observables"},
                   {"--fit-lo", "fit.lo"},
                   {"--fit-hi", "fit.hi"},
                   {"--output-dir", "output.dir"},
                   {"--seed", "seed"}});
    evolve->add_option("--set", ev_state->sets, "override any config key, key=value");
    evolve->callback([&, ev_state] { run_from_flags(*ev_state, {"msd", "return"}); });

    auto* ctrw_cmd = app.add_subcommand("ctrw", "propagate the classical walk from one site");
    auto ct_state = std::make_shared<RunCmdState>();
    add_lattice_opts(ctrw_cmd, ct_state->lat);
    add_run_flags(ctrw_cmd, *ct_state,
                  {{"--name", "name"},
                   {"--site", "initial.site"},
                   {"--tmin", "time.min"},
                   {"--tmax", "time.max"},
                   {"--points", "time.points"},
                   {"--observables", "observables"},
                   {"--fit-lo", "fit.lo"},
                   {"--fit-hi", "fit.hi"},
                   {"--output-dir", "output.dir"},
                   {"--seed", "seed"}});
    ctrw_cmd->add_option("--set", ct_state->sets, "override any config key, key=value");
    ctrw_cmd->callback(
        [&, ct_state] { run_from_flags(*ct_state, {"classical_msd", "classical_return"}); });

    auto* levels = app.add_subcommand("levelspacing",
                                      "integrated level-spacing staircase and power-law fit");
    auto lv_state = std::make_shared<RunCmdState>();
    add_lattice_opts(levels, lv_state->lat);
    add_run_flags(levels, *lv_state,
                  {{"--name", "name"}, {"--output-dir", "output.dir"}, {"--seed", "seed"}});
    levels->add_option("--set", lv_state->sets, "override any config key, key=value");
    levels->callback([&, lv_state] { run_from_flags(*lv_state, {"spectrum", "staircase"}); });

    // sweep-gamma --------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep-gamma",
                                     "transport exponent versus gamma on interpolating lattices");
    int sw_generation = 6;
    std::string sw_gammas = "0,0.25,0.5,0.75,1";
    double sw_fit_lo = 0.0, sw_fit_hi = 0.0;
    double sw_tmin = 1e-2, sw_tmax = 1e4;
    int sw_points = qfrac::dynamics::kDefaultGridPoints;
    std::string sw_output_dir = "out";
    sweep->add_option("--generation", sw_generation, "interpolating generation")
        ->capture_default_str();
    sweep->add_option("--gammas", sw_gammas, "comma-separated gamma values")
        ->capture_default_str();
    sweep->add_option("--fit-lo", sw_fit_lo, "fit window start (default: 1)");
    sweep->add_option("--fit-hi", sw_fit_hi, "fit window end (default: L/2)");
    sweep->add_option("--tmin", sw_tmin, "first time")->capture_default_str();
    sweep->add_option("--tmax", sw_tmax, "last time")->capture_default_str();
    sweep->add_option("--points", sw_points, "grid points")->capture_default_str();
    sweep->add_option("--output-dir", sw_output_dir, "output directory")->capture_default_str();
    sweep->callback([&] {
        qx::LatticeSpec spec;
        spec.kind = qfrac::lattice::LatticeKind::Interpolating;
        spec.generation = sw_generation;
        qx::check_resource_guard(spec);

        std::vector<double> gammas;
        {
            qx::ExperimentConfig tmp;
            std::stringstream ss(sw_gammas);
            std::string item;
            while (std::getline(ss, item, ',')) {
                qx::apply_override(tmp, "lattice.gamma", item);
                gammas.push_back(tmp.lattice.gamma);
            }
        }
        qfrac::analysis::TimeWindow window =
            qfrac::analysis::regular_fit_window(qx::build(spec));
        if (sweep->count("--fit-lo") > 0) window.t_lo = sw_fit_lo;
        if (sweep->count("--fit-hi") > 0) window.t_hi = sw_fit_hi;
        const std::vector<double> times =
            qfrac::dynamics::log_time_grid(sw_tmin, sw_tmax, sw_points);
        const qfrac::analysis::GammaSweepResult result =
            qfrac::analysis::gamma_sweep(sw_generation, gammas, window, times);

        std::ostringstream body;
        body << "# qfrac gamma sweep\n";
        body << "# lattice.kind = interpolating\n";
        body << "# lattice.generation = " << sw_generation << "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g %.12g", window.t_lo, window.t_hi);
        body << "# fit.window = " << buf << "\n";
        qfrac::analysis::write_sweep(body, result);
        std::error_code ec;
        std::filesystem::create_directories(sw_output_dir, ec);
        if (ec)
            throw qfrac::ConfigError("--output-dir",
                                     "cannot create '" + sw_output_dir + "': " + ec.message());
        write_text(sw_output_dir + "/sweep.txt", body.str());
        std::cout << sw_output_dir + "/sweep.txt" << "\n";
    });

    // run / list-presets -------------------------------------------------
    auto* run = app.add_subcommand("run", "run a named preset or a config file");
    std::string run_preset_name;
    std::string run_config_path;
    std::string run_output_dir;
    std::vector<std::string> run_sets;
    run->add_option("preset", run_preset_name, "preset name (see list-presets)");
    run->add_option("--config", run_config_path, "experiment config file, - for stdin");
    run->add_option("--output-dir", run_output_dir, "output directory (default: out)");
    run->add_option("--set", run_sets, "override any config key, key=value");
    run->callback([&] {
        const bool have_preset = !run_preset_name.empty();
        const bool have_config = !run_config_path.empty();
        if (have_preset == have_config)
            throw qfrac::ConfigError("run", "give exactly one of a preset name or --config");
        if (have_preset) {
            if (!run_sets.empty())
                throw qfrac::ConfigError("--set", "presets are fixed; --set needs --config");
            const std::string out_dir =
                run_output_dir.empty() ? std::string("out") : run_output_dir;
            report_files(qx::run_preset(run_preset_name, out_dir));
            return;
        }
        qx::ExperimentConfig cfg;
        if (run_config_path == "-") {
            cfg = qx::parse_config(std::cin);
        } else {
            std::ifstream f(run_config_path);
            if (!f)
                throw qfrac::ConfigError("--config",
                                         "cannot read '" + run_config_path + "'");
            cfg = qx::parse_config(f);
        }
        apply_sets(cfg, run_sets);
        if (!run_output_dir.empty()) qx::apply_override(cfg, "output.dir", run_output_dir);
        report_files(qx::run_experiment(cfg));
    });

    auto* list = app.add_subcommand("list-presets", "list available presets");
    list->callback([&] {
        for (const qx::PresetInfo& p : qx::list_presets())
            std::cout << p.name << "  " << p.description << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const qfrac::ConfigError& e) {
        std::cerr << "qfrac: " << e.what() << "\n";
        return kExitUsage;
    } catch (const qfrac::ResourceGuardError& e) {
        std::cerr << "qfrac: " << e.what() << "\n";
        return kExitResource;
    } catch (const qfrac::NumericalError& e) {
        std::cerr << "qfrac: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "qfrac: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        std::cerr << "qfrac: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "qfrac: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
