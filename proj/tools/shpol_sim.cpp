// Command-line front end: simulate | profile | dispersion-check | converge-trace.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "shpol/shpol.hpp"

namespace {

int to_int(shpol::ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-homodyne link with adaptive polarization control"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int grid_n = 64;
    std::string controller;

    app.add_option("--config", config_path, "link configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "override link.rng_seed");
    app.add_option("--out", out_dir, "directory for CSV exports");
    app.add_option("--grid", grid_n, "profile grid size per axis")->check(CLI::Range(16, 4096));
    app.add_option("--controller", controller, "enable the feedback loop")->check(CLI::IsMember({"on", "off"}));

    auto* simulate = app.add_subcommand("simulate", "run the link with the controller off and on");
    auto* profile = app.add_subcommand("profile", "sweep the objective over the PC knobs");
    auto* dispersion = app.add_subcommand("dispersion-check", "compare separation with and without dispersion");
    auto* trace = app.add_subcommand("converge-trace", "export a single convergence trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : to_int(shpol::ExitCode::config_error);
    }

    try {
        shpol::LinkConfig cfg = config_path.empty() ? shpol::LinkConfig{} : shpol::load_config(config_path);
        if (seed) cfg.rng_seed = *seed;
        if (!controller.empty()) cfg.controller_enabled = controller == "on";
        shpol::validate(cfg);

        const std::optional<std::filesystem::path> out =
            out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir);

        if (*simulate) {
            const auto r = shpol::simulate(cfg, out);
            std::cout << r.summary;
            return to_int(r.exit);
        }
        if (*profile) {
            const auto r = shpol::profile(cfg, grid_n, out);
            std::cout << r.summary;
            return to_int(r.exit);
        }
        if (*dispersion) {
            const auto r = shpol::dispersion_check(cfg, out);
            std::cout << r.summary;
            return to_int(r.exit);
        }
        if (*trace) {
            const auto r = shpol::converge_trace(cfg, out);
            std::cout << r.summary;
            return to_int(r.exit);
        }
    } catch (const shpol::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return to_int(shpol::ExitCode::config_error);
    } catch (const shpol::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return to_int(shpol::ExitCode::io_error);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return to_int(shpol::ExitCode::io_error);
    }
    return to_int(shpol::ExitCode::config_error);
}
