#pragma once

/**
 * End-to-end self-homodyne link runs: transmitter, channel, polarization
 * controller and receiver wired together from a LinkConfig. These are the
 * operations behind the command-line subcommands.
 */

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "shpol/channel.hpp"
#include "shpol/config.hpp"
#include "shpol/controller.hpp"
#include "shpol/csv.hpp"
#include "shpol/receiver.hpp"
#include "shpol/waveform.hpp"

namespace shpol {

enum class ExitCode : int { ok = 0, config_error = 2, not_converged = 3, io_error = 4 };

/// Ordered flat key=value record.
class Summary {
public:
    void add(std::string key, std::string value) { items_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double v) { add(std::move(key), csv::fmt(v)); }
    void add(std::string key, int v) { add(std::move(key), std::to_string(v)); }
    void add(std::string key, bool v) { add(std::move(key), std::string(v ? "true" : "false")); }
    void add(std::string key, const char* v) { add(std::move(key), std::string(v)); }

    const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : items_) {
            if (k == key) return v;
        }
        return std::nullopt;
    }

    friend std::ostream& operator<<(std::ostream& os, const Summary& s) {
        for (const auto& [k, v] : s.items_) os << k << '=' << v << '\n';
        return os;
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

/// Transmitted frame plus the received plant for one configuration.
struct LinkSetup {
    std::vector<std::uint8_t> bits;
    DualPolWaveform launched;
    ChannelReport channel_report;
    Plant plant;
};

inline LinkSetup build_link(const LinkConfig& cfg) {
    validate(cfg);
    auto bits = balanced_qpsk_bits(static_cast<std::size_t>(cfg.frame_symbols), cfg.bits_seed());
    DualPolWaveform launched =
        launch_with_carrier(qpsk_modulate(bits, cfg.symbol_rate(), cfg.samples_per_symbol), cfg.power_diff_db);

    ChannelConfig ch = cfg.channel;
    ch.rng_seed = cfg.noise_seed();
    // OSNR is quoted against the modulated polarization, not the carrier.
    const double signal_power = mean_power(launched).px;
    ChannelOutput out = run_channel(launched, ch, signal_power);

    Plant plant(std::move(out.waveform), out.report.applied_matrix, cfg.rx_theta,
                static_cast<std::size_t>(cfg.window_symbols));
    return {std::move(bits), std::move(launched), out.report, std::move(plant)};
}

struct SimulationResult {
    Summary summary;
    ExitCode exit = ExitCode::ok;
    ConvergenceReport report;  // meaningful when the controller ran
    RxResult rx_before;
    RxResult rx_after;
    double power_diff_before_db = 0.0;
    double power_diff_after_db = 0.0;
};

/**
 * tx -> channel -> controller -> rx, evaluated with the controller parked at
 * its start point ("before") and after the feedback loop ("after"). With the
 * controller disabled both columns describe the parked state.
 */
inline SimulationResult simulate(const LinkConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {}) {
    const LinkSetup link = build_link(cfg);
    const ControllerParams params = cfg.controller_params();

    SimulationResult r;
    r.power_diff_before_db = power_difference_db(link.plant.arm_powers(0.0, 0.0));
    r.rx_before = receive(link.plant.output(0.0, 0.0), link.bits);

    double c1 = 0.0;
    double c2 = 0.0;
    bool converged = true;
    if (cfg.controller_enabled) {
        r.report = converge_with_restarts(link.plant, params, cfg.restart_seed());
        c1 = r.report.final_state.c1;
        c2 = r.report.final_state.c2;
        converged = r.report.converged;
        r.power_diff_after_db = r.report.final_power_diff_db;
        r.rx_after = receive(link.plant.output(c1, c2), link.bits);
    } else {
        r.power_diff_after_db = r.power_diff_before_db;
        r.rx_after = r.rx_before;
    }
    const JonesMatrix M = link.plant.effective_matrix(c1, c2);

    Summary& s = r.summary;
    s.add("command", "simulate");
    s.add("controller", cfg.controller_enabled ? "on" : "off");
    s.add("bit_rate", cfg.bit_rate);
    s.add("symbol_rate", cfg.symbol_rate());
    s.add("frame_symbols", cfg.frame_symbols);
    s.add("launch_power_diff_db", cfg.power_diff_db);
    s.add("theta", cfg.channel.theta);
    s.add("phi", cfg.channel.phi);
    s.add("fiber_length_km", cfg.channel.fiber_length_km);
    s.add("dispersion_ps_nm_km", cfg.channel.dispersion_ps_nm_km);
    s.add("osnr_db", cfg.channel.osnr_db ? csv::fmt(*cfg.channel.osnr_db) : std::string("noiseless"));
    s.add("power_diff_before_db", r.power_diff_before_db);
    s.add("power_diff_after_db", r.power_diff_after_db);
    s.add("converged", converged);
    s.add("iterations", cfg.controller_enabled ? r.report.iterations : 0);
    s.add("restarts", cfg.controller_enabled ? r.report.restarts : 0);
    s.add("final_c1", c1);
    s.add("final_c2", c2);
    s.add("residual_offdiag", std::max(std::abs(M(0, 1)), std::abs(M(1, 0))));
    s.add("residual_phase", std::arg(M(0, 0)));
    s.add("evm_before_percent", r.rx_before.evm_percent);
    s.add("evm_after_percent", r.rx_after.evm_percent);
    s.add("ber_before", r.rx_before.ber);
    s.add("ber_after", r.rx_after.ber);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        constellation_export(r.rx_before.iq_samples, *out_dir / "constellation_before.csv");
        constellation_export(r.rx_after.iq_samples, *out_dir / "constellation_after.csv");
        if (cfg.controller_enabled) {
            write_trace_csv(initial_state(0.0, 0.0, params), r.report.final_state, link.plant, *out_dir / "trace.csv");
        }
    }
    if (!converged) r.exit = ExitCode::not_converged;
    return r;
}

struct ProfileResult {
    Summary summary;
    PowerProfile profile;
    ExitCode exit = ExitCode::ok;
};

/// Objective landscape over the two PC knobs, cross-checked against the feedback loop.
inline ProfileResult profile(const LinkConfig& cfg, int grid_n, const std::optional<std::filesystem::path>& out_dir = {}) {
    const LinkSetup link = build_link(cfg);
    ProfileResult r;
    r.profile = power_profile(link.plant, grid_n);
    const ConvergenceReport conv = converge_with_restarts(link.plant, cfg.controller_params(), cfg.restart_seed());
    const double p_conv = measure_objective(conv.final_state, link.plant);
    const double p_grid = r.profile.min();

    Summary& s = r.summary;
    s.add("command", "profile");
    s.add("grid_n", grid_n);
    s.add("rows", grid_n * grid_n);
    s.add("grid_min_p", p_grid);
    s.add("grid_max_p", *std::max_element(r.profile.values.begin(), r.profile.values.end()));
    s.add("grid_minima_count", static_cast<int>(r.profile.count_minima(1e-9)));
    s.add("converged_p", p_conv);
    s.add("grid_vs_converged_db", 10.0 * std::log10(p_grid / p_conv));
    s.add("converged", conv.converged);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        write_profile_csv(r.profile, *out_dir / "profile.csv");
    }
    return r;
}

struct TraceResult {
    Summary summary;
    ConvergenceReport report;
    ExitCode exit = ExitCode::ok;
};

/// Single feedback run from (0, 0) with the per-iteration arm powers exported.
inline TraceResult converge_trace(const LinkConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {}) {
    const LinkSetup link = build_link(cfg);
    const ControllerParams params = cfg.controller_params();
    const ControllerState start = initial_state(0.0, 0.0, params);
    TraceResult r;
    r.report = converge(start, link.plant, params);

    Summary& s = r.summary;
    s.add("command", "converge-trace");
    s.add("iterations", r.report.iterations);
    s.add("initial_power_diff_db", r.report.initial_power_diff_db);
    s.add("final_power_diff_db", r.report.final_power_diff_db);
    s.add("final_mu", r.report.final_state.mu);
    s.add("gradient_norm", r.report.final_state.last_gradient_norm);
    s.add("residual_offdiag", r.report.residual_offdiag);
    s.add("residual_phase", r.report.residual_phase);
    s.add("converged", r.report.converged);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        write_trace_csv(start, r.report.final_state, link.plant, *out_dir / "trace.csv");
    }
    if (!r.report.converged) r.exit = ExitCode::not_converged;
    return r;
}

struct DispersionCheckResult {
    Summary summary;
    SimulationResult dispersed;
    SimulationResult reference;
    bool within_band = false;
    bool evm_degraded = false;
    ExitCode exit = ExitCode::ok;
};

/**
 * Runs the configured link twice, with its dispersion and with D = 0, and
 * checks that polarization separation is unaffected (final power difference
 * within 0.5 dB) while the constellation is dispersed (EVM does not improve).
 */
inline DispersionCheckResult dispersion_check(const LinkConfig& cfg,
                                              const std::optional<std::filesystem::path>& out_dir = {}) {
    LinkConfig ref_cfg = cfg;
    ref_cfg.channel.dispersion_ps_nm_km = 0.0;

    DispersionCheckResult r;
    r.dispersed = simulate(cfg, out_dir ? std::optional(*out_dir / "dispersed") : std::nullopt);
    r.reference = simulate(ref_cfg, out_dir ? std::optional(*out_dir / "reference") : std::nullopt);
    const double gap = std::abs(r.dispersed.power_diff_after_db - r.reference.power_diff_after_db);
    const bool has_dispersion = cfg.channel.fiber_length_km > 0.0 && cfg.channel.dispersion_ps_nm_km != 0.0;
    r.within_band = gap <= 0.5;
    r.evm_degraded = has_dispersion ? r.dispersed.rx_after.evm_percent > r.reference.rx_after.evm_percent
                                    : r.dispersed.rx_after.evm_percent == r.reference.rx_after.evm_percent;

    Summary& s = r.summary;
    s.add("command", "dispersion-check");
    s.add("fiber_length_km", cfg.channel.fiber_length_km);
    s.add("dispersion_ps_nm_km", cfg.channel.dispersion_ps_nm_km);
    s.add("power_diff_after_db", r.dispersed.power_diff_after_db);
    s.add("power_diff_after_db_no_dispersion", r.reference.power_diff_after_db);
    s.add("power_diff_gap_db", gap);
    s.add("evm_after_percent", r.dispersed.rx_after.evm_percent);
    s.add("evm_after_percent_no_dispersion", r.reference.rx_after.evm_percent);
    s.add("separation_within_band", r.within_band);
    s.add("evm_degraded", r.evm_degraded);
    s.add("converged", r.dispersed.exit == ExitCode::ok && r.reference.exit == ExitCode::ok);

    if (r.dispersed.exit != ExitCode::ok || r.reference.exit != ExitCode::ok || !r.within_band || !r.evm_degraded) {
        r.exit = ExitCode::not_converged;
    }
    return r;
}

}  // namespace shpol
