// Command-line front end: steady | sweep | spectrum | stability | verify.
// Exit codes: 0 ok, 2 config error, 3 solver failure, 4 dynamical instability,
// 5 verification failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <quadom/quadom.hpp>

namespace {

quadom::RunConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw quadom::config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return quadom::parse_config_text(buf.str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadratic-optomechanics simulation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int jobs = 0;
    bool no_nonstandard = false;
    bool pair_channel_weight = false;
    bool thermal_input = false;

    app.add_option("--config", config_path, "run configuration file (key = value)");
    app.add_option("--out", out_dir, "output directory (default: current)");
    app.add_option("--jobs", jobs, "worker threads (QUADOM_JOBS as fallback)");
    app.add_flag("--no-nonstandard", no_nonstandard,
                 "drop the momentum-momentum interaction (beta = 0)");
    app.add_flag("--pair-channel-weight", pair_channel_weight,
                 "attach the half-quantum input weight to the phonon-pair channel");
    app.add_flag("--thermal-input", thermal_input,
                 "use the thermal bath occupancy in the spectral input weights");

    auto* c_steady = app.add_subcommand("steady", "steady-state drive sweep");
    auto* c_sweep = app.add_subcommand("sweep", "drive x frequency-ratio sweep");
    auto* c_spectrum = app.add_subcommand("spectrum",
                                          "output spectra with/without the interaction");
    auto* c_stability = app.add_subcommand("stability", "stability map over populations");
    auto* c_verify = app.add_subcommand("verify", "operator-algebra and solver oracles");
    // accept the shared flags on either side of the verb
    for (CLI::App* sub : {c_steady, c_sweep, c_spectrum, c_stability, c_verify})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return quadom::exit_config;
    }

    try {
        quadom::RunConfig cfg = load_config(config_path);
        if (no_nonstandard) cfg.include_nonstandard = false;
        if (pair_channel_weight) cfg.pair_channel_weight = true;
        if (thermal_input) cfg.thermal_input = true;
        const unsigned n_jobs = quadom::resolve_jobs(jobs);

        if (c_steady->parsed()) return quadom::cmd_steady(cfg, out_dir);
        if (c_sweep->parsed()) return quadom::cmd_sweep(cfg, out_dir, n_jobs);
        if (c_spectrum->parsed()) return quadom::cmd_spectrum(cfg, out_dir, n_jobs);
        if (c_stability->parsed()) return quadom::cmd_stability(cfg, out_dir);
        if (c_verify->parsed()) return quadom::cmd_verify(cfg, out_dir);
        std::cerr << "no subcommand\n";
        return quadom::exit_config;
    } catch (const quadom::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return quadom::exit_config;
    } catch (const quadom::invalid_parameter& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return quadom::exit_config;
    } catch (const quadom::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return quadom::exit_solver;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return quadom::exit_solver;
    }
}
