#pragma once

// Link configuration: defaults, a `key = value` sectioned text format, and
// validation. Every simulation entry point takes a validated LinkConfig.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "shpol/channel.hpp"
#include "shpol/controller.hpp"
#include "shpol/errors.hpp"

namespace shpol {

struct LinkConfig {
    double bit_rate = 30e9;
    int samples_per_symbol = 8;
    int frame_symbols = 4096;
    double power_diff_db = 15.0;
    double rx_theta = 0.0;
    int window_symbols = 0;  // monitor averaging window; 0 = whole frame
    std::uint64_t rng_seed = 1;
    bool controller_enabled = true;

    // Mixed default plant: about 6 dB of uncontrolled power difference at a 15 dB launch.
    ChannelConfig channel{.theta = 0.39269908169872414,
                          .phi = 0.6427,
                          .fiber_length_km = 20.0,
                          .dispersion_ps_nm_km = 17.0,
                          .center_wavelength_nm = 1550.0,
                          .osnr_db = std::nullopt,
                          .rng_seed = 1};

    ControllerParams controller{};
    std::optional<double> tol_power_diff_db{};  // default: power_diff_db - 1

    double symbol_rate() const noexcept { return bit_rate / 2.0; }

    ControllerParams controller_params() const {
        ControllerParams p = controller;
        p.tol_power_diff_db = tol_power_diff_db.value_or(power_diff_db - 1.0);
        return p;
    }

    // Per-purpose seeds derived from the one configured seed.
    std::uint64_t bits_seed() const noexcept { return rng_seed; }
    std::uint64_t noise_seed() const noexcept { return rng_seed * 0x9E3779B97F4A7C15ull + 1; }
    std::uint64_t restart_seed() const noexcept { return rng_seed * 0x9E3779B97F4A7C15ull + 2; }
};

inline void validate(const LinkConfig& c) {
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be a positive number");
    };
    auto finite = [](double v, const char* field) {
        if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    };
    positive(c.bit_rate, "link.bit_rate");
    if (c.samples_per_symbol < 2) throw ConfigError("link.samples_per_symbol", "must be >= 2");
    if (c.frame_symbols < 64 || c.frame_symbols % 4 != 0) {
        throw ConfigError("link.frame_symbols", "must be a multiple of 4 and >= 64");
    }
    finite(c.power_diff_db, "link.power_diff_db");
    finite(c.rx_theta, "link.rx_theta");
    if (c.window_symbols < 0 || c.window_symbols > c.frame_symbols) {
        throw ConfigError("link.window_symbols", "must be in 0..frame_symbols");
    }
    finite(c.channel.theta, "channel.theta");
    finite(c.channel.phi, "channel.phi");
    if (!(c.channel.fiber_length_km >= 0.0) || !std::isfinite(c.channel.fiber_length_km)) {
        throw ConfigError("channel.fiber_length_km", "must be >= 0");
    }
    finite(c.channel.dispersion_ps_nm_km, "channel.dispersion_ps_nm_km");
    positive(c.channel.center_wavelength_nm, "channel.center_wavelength_nm");
    if (c.channel.osnr_db) finite(*c.channel.osnr_db, "channel.osnr_db");
    positive(c.controller.mu0, "controller.mu0");
    positive(c.controller.mu_min, "controller.mu_min");
    positive(c.controller.delta, "controller.delta");
    positive(c.controller.grad_tol, "controller.grad_tol");
    positive(c.controller.diag_tol, "controller.diag_tol");
    if (c.controller.max_iter < 1) throw ConfigError("controller.max_iter", "must be >= 1");
    if (c.controller.max_restarts < 0) throw ConfigError("controller.max_restarts", "must be >= 0");
    if (c.tol_power_diff_db) finite(*c.tol_power_diff_db, "controller.tol_power_diff_db");
}

namespace detail {

template <class T>
T parse_value(const std::string& field, const std::string& text) {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError(field, "cannot parse '" + text + "'");
    }
    return v;
}

inline bool parse_switch(const std::string& field, const std::string& text) {
    if (text == "on" || text == "true" || text == "1") return true;
    if (text == "off" || text == "false" || text == "0") return false;
    throw ConfigError(field, "expected on|off, got '" + text + "'");
}

}  // namespace detail

/**
 * Parses the sectioned text format:
 *
 *   [link]        bit_rate, samples_per_symbol, frame_symbols, power_diff_db,
 *                 rx_theta, window_symbols, rng_seed
 *   [channel]     theta, phi, fiber_length_km, dispersion_ps_nm_km,
 *                 center_wavelength_nm, osnr_db (number or "noiseless")
 *   [controller]  enabled (on|off), mu0, mu_min, delta, grad_tol,
 *                 tol_power_diff_db, diag_tol, max_iter, max_restarts
 *
 * Keys not given keep their defaults. Unknown sections or keys are errors.
 */
inline LinkConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
    }

    LinkConfig c;
    using Setter = void (*)(LinkConfig&, const std::string&, const std::string&);
    static const std::map<std::string, Setter> setters{
        {"link.bit_rate", [](LinkConfig& c, const std::string& f, const std::string& v) { c.bit_rate = detail::parse_value<double>(f, v); }},
        {"link.samples_per_symbol", [](LinkConfig& c, const std::string& f, const std::string& v) { c.samples_per_symbol = detail::parse_value<int>(f, v); }},
        {"link.frame_symbols", [](LinkConfig& c, const std::string& f, const std::string& v) { c.frame_symbols = detail::parse_value<int>(f, v); }},
        {"link.power_diff_db", [](LinkConfig& c, const std::string& f, const std::string& v) { c.power_diff_db = detail::parse_value<double>(f, v); }},
        {"link.rx_theta", [](LinkConfig& c, const std::string& f, const std::string& v) { c.rx_theta = detail::parse_value<double>(f, v); }},
        {"link.window_symbols", [](LinkConfig& c, const std::string& f, const std::string& v) { c.window_symbols = detail::parse_value<int>(f, v); }},
        {"link.rng_seed", [](LinkConfig& c, const std::string& f, const std::string& v) { c.rng_seed = detail::parse_value<std::uint64_t>(f, v); }},
        {"channel.theta", [](LinkConfig& c, const std::string& f, const std::string& v) { c.channel.theta = detail::parse_value<double>(f, v); }},
        {"channel.phi", [](LinkConfig& c, const std::string& f, const std::string& v) { c.channel.phi = detail::parse_value<double>(f, v); }},
        {"channel.fiber_length_km", [](LinkConfig& c, const std::string& f, const std::string& v) { c.channel.fiber_length_km = detail::parse_value<double>(f, v); }},
        {"channel.dispersion_ps_nm_km", [](LinkConfig& c, const std::string& f, const std::string& v) { c.channel.dispersion_ps_nm_km = detail::parse_value<double>(f, v); }},
        {"channel.center_wavelength_nm", [](LinkConfig& c, const std::string& f, const std::string& v) { c.channel.center_wavelength_nm = detail::parse_value<double>(f, v); }},
        {"channel.osnr_db", [](LinkConfig& c, const std::string& f, const std::string& v) {
             c.channel.osnr_db = v == "noiseless" ? std::nullopt : std::optional<double>(detail::parse_value<double>(f, v));
         }},
        {"controller.enabled", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller_enabled = detail::parse_switch(f, v); }},
        {"controller.mu0", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.mu0 = detail::parse_value<double>(f, v); }},
        {"controller.mu_min", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.mu_min = detail::parse_value<double>(f, v); }},
        {"controller.delta", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.delta = detail::parse_value<double>(f, v); }},
        {"controller.grad_tol", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.grad_tol = detail::parse_value<double>(f, v); }},
        {"controller.tol_power_diff_db", [](LinkConfig& c, const std::string& f, const std::string& v) { c.tol_power_diff_db = detail::parse_value<double>(f, v); }},
        {"controller.diag_tol", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.diag_tol = detail::parse_value<double>(f, v); }},
        {"controller.max_iter", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.max_iter = detail::parse_value<int>(f, v); }},
        {"controller.max_restarts", [](LinkConfig& c, const std::string& f, const std::string& v) { c.controller.max_restarts = detail::parse_value<int>(f, v); }},
    };

    for (const auto& [section, keys] : tree) {
        if (!keys.data().empty()) {
            throw ConfigError(section, "key outside of a [section]");
        }
        for (const auto& [key, node] : keys) {
            const std::string field = section + "." + key;
            const auto it = setters.find(field);
            if (it == setters.end()) {
                throw ConfigError(field, "unknown configuration key");
            }
            it->second(c, field, node.get_value<std::string>());
        }
    }
    validate(c);
    return c;
}

inline LinkConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config " + path.string());
    }
    return parse_config(in);
}

}  // namespace shpol
